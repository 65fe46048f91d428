#pragma once

#include "gaplap/chart.hpp"
#include "gaplap/corpus.hpp"
#include "gaplap/encoder.hpp"
#include "gaplap/gap.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

namespace gaplap {

enum class Mode { Gap, Lap, CrfSupervised };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

// Everything needed to parse: vocabulary, encoder weights and, for GAP, the
// decoder.
struct Model {
  Mode mode = Mode::Gap;
  corpus::Vocabulary vocab;
  encoder::EncoderParams encoder;
  std::optional<gap::DecoderParams> decoder;
  chart::TreeOptions tree;
};

HeadArray predict(const Model& model, const corpus::IndexedSentence& sentence);

double evaluate_uas(const Model& model, std::span<const corpus::IndexedSentence> sentences,
                    bool ignore_punct = false);

// Checkpoint layout:
//   "GAPLAP1\n"
//   word vocabulary: count line, then "id surface" lines
//   tag vocabulary: same layout
//   tensors until EOF: "name rank d1 ... dk\n" + row-major little-endian f64
void save_model(std::ostream& out, const Model& model);
Model load_model(std::istream& in);
void save_model_file(const std::string& path, const Model& model);
Model load_model_file(const std::string& path);

}  // namespace gaplap
