#include "gaplap/model.hpp"

#include "gaplap/lap.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <type_traits>

namespace gaplap {

namespace {

constexpr std::string_view kMagic = "GAPLAP1";

struct RawTensor {
  std::vector<Index> shape;
  std::vector<double> values;  // row-major
};

void write_double(std::ostream& out, double value) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffu);
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_double(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw DataError("checkpoint payload truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

template <typename T>
void write_tensor(std::ostream& out, std::string_view name, const T& t) {
  if constexpr (T::ColsAtCompileTime == 1) {
    out << name << " 1 " << t.size() << '\n';
    for (Index i = 0; i < t.size(); ++i) write_double(out, t(i));
  } else {
    out << name << " 2 " << t.rows() << ' ' << t.cols() << '\n';
    for (Index r = 0; r < t.rows(); ++r)
      for (Index c = 0; c < t.cols(); ++c) write_double(out, t(r, c));
  }
}

template <typename T>
void assign_tensor(const std::map<std::string, RawTensor>& tensors, std::string_view name, T& t) {
  auto it = tensors.find(std::string(name));
  if (it == tensors.end()) throw DataError("checkpoint is missing tensor " + std::string(name));
  const auto& raw = it->second;
  if constexpr (T::ColsAtCompileTime == 1) {
    if (raw.shape.size() != 1 || raw.shape[0] != t.size())
      throw DataError("checkpoint tensor " + std::string(name) + " has the wrong shape");
    for (Index i = 0; i < t.size(); ++i) t(i) = raw.values[static_cast<std::size_t>(i)];
  } else {
    if (raw.shape.size() != 2 || raw.shape[0] != t.rows() || raw.shape[1] != t.cols())
      throw DataError("checkpoint tensor " + std::string(name) + " has the wrong shape");
    std::size_t k = 0;
    for (Index r = 0; r < t.rows(); ++r)
      for (Index c = 0; c < t.cols(); ++c) t(r, c) = raw.values[k++];
  }
}

void write_vocab_block(std::ostream& out, const std::vector<std::string>& entries) {
  out << entries.size() << '\n';
  for (std::size_t i = 0; i < entries.size(); ++i) out << i << ' ' << entries[i] << '\n';
}

std::vector<std::string> read_vocab_block(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("checkpoint vocabulary block missing");
  std::size_t count = 0;
  try {
    count = std::stoul(line);
  } catch (const std::exception&) {
    throw DataError("checkpoint vocabulary count is not a number");
  }
  std::vector<std::string> entries;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw DataError("checkpoint vocabulary truncated");
    const auto space = line.find(' ');
    if (space == std::string::npos || line.substr(0, space) != std::to_string(i))
      throw DataError("checkpoint vocabulary entry " + std::to_string(i) + " is malformed");
    entries.push_back(line.substr(space + 1));
  }
  return entries;
}

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::Gap: return "gap";
    case Mode::Lap: return "lap";
    case Mode::CrfSupervised: return "crf-supervised";
  }
  return "gap";
}

Mode parse_mode(std::string_view text) {
  if (text == "gap") return Mode::Gap;
  if (text == "lap") return Mode::Lap;
  if (text == "crf-supervised" || text == "crf") return Mode::CrfSupervised;
  throw ConfigError("unknown mode '" + std::string(text) + "' (expected gap|lap|crf-supervised)");
}

HeadArray predict(const Model& model, const corpus::IndexedSentence& sentence) {
  switch (model.mode) {
    case Mode::Lap:
      return lap::lap_predict(sentence, model.encoder, model.tree).heads;
    case Mode::Gap:
      if (model.decoder) {
        const auto fwd = encoder::forward(sentence, model.encoder);
        return gap::predict(fwd.scores, *model.decoder, sentence.words, model.tree);
      }
      [[fallthrough]];
    case Mode::CrfSupervised:
      return chart::eisner_decode(encoder::forward(sentence, model.encoder).scores, model.tree)
          .heads;
  }
  return {};
}

double evaluate_uas(const Model& model, std::span<const corpus::IndexedSentence> sentences,
                    bool ignore_punct) {
  std::vector<HeadArray> predicted, gold;
  std::vector<std::vector<bool>> punct;
  for (const auto& s : sentences) {
    if (!s.labeled()) throw DataError("evaluation needs gold trees");
    predicted.push_back(predict(model, s));
    gold.push_back(s.heads);
    punct.push_back(s.punct);
  }
  return corpus::uas(predicted, gold, punct, ignore_punct);
}

void save_model(std::ostream& out, const Model& model) {
  out << kMagic << '\n';
  write_vocab_block(out, model.vocab.words());
  write_vocab_block(out, model.vocab.tags());
  const auto& d = model.encoder.dims;
  Eigen::VectorXd meta(8);
  meta << static_cast<double>(model.mode), static_cast<double>(d.word_dim),
      static_cast<double>(d.pos_dim), static_cast<double>(d.hidden_dim),
      static_cast<double>(d.arc_dim), static_cast<double>(d.latent_dim), d.latent ? 1.0 : 0.0,
      model.tree.single_root ? 1.0 : 0.0;
  write_tensor(out, "meta.model", meta);
  encoder::for_each_tensor([&out](std::string_view name, const auto& t) { write_tensor(out, name, t); },
                           model.encoder);
  if (model.decoder) write_tensor(out, "gap.log_theta", model.decoder->log_theta);
  if (!out) throw DataError("failed writing checkpoint");
}

Model load_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw DataError("not a GAPLAP1 checkpoint (bad or unsupported version header)");
  auto words = read_vocab_block(in);
  auto tags = read_vocab_block(in);

  std::map<std::string, RawTensor> tensors;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream header(line);
    std::string name;
    std::size_t rank = 0;
    if (!(header >> name >> rank) || rank < 1 || rank > 2)
      throw DataError("malformed checkpoint tensor header '" + line + "'");
    RawTensor raw;
    std::size_t count = 1;
    for (std::size_t k = 0; k < rank; ++k) {
      Index dim = 0;
      if (!(header >> dim) || dim < 0) throw DataError("malformed checkpoint tensor shape");
      raw.shape.push_back(dim);
      count *= static_cast<std::size_t>(dim);
    }
    raw.values.resize(count);
    for (auto& v : raw.values) v = read_double(in);
    tensors[name] = std::move(raw);
  }

  Model model;
  model.vocab = corpus::Vocabulary(std::move(words), std::move(tags));
  Eigen::VectorXd meta(8);
  assign_tensor(tensors, "meta.model", meta);
  const int mode = static_cast<int>(meta(0));
  if (mode < 0 || mode > 2) throw DataError("checkpoint has an unknown model mode");
  model.mode = static_cast<Mode>(mode);
  encoder::Dims dims;
  dims.word_vocab = model.vocab.word_count();
  dims.pos_vocab = model.vocab.pos_count();
  dims.word_dim = static_cast<Index>(meta(1));
  dims.pos_dim = static_cast<Index>(meta(2));
  dims.hidden_dim = static_cast<Index>(meta(3));
  dims.arc_dim = static_cast<Index>(meta(4));
  dims.latent_dim = static_cast<Index>(meta(5));
  dims.latent = meta(6) != 0.0;
  model.tree.single_root = meta(7) != 0.0;
  model.encoder = encoder::EncoderParams::zeros(dims);
  encoder::for_each_tensor(
      [&tensors](std::string_view name, auto& t) { assign_tensor(tensors, name, t); },
      model.encoder);
  if (tensors.count("gap.log_theta")) {
    gap::DecoderParams decoder;
    decoder.log_theta.resize(dims.word_vocab, dims.word_vocab);
    assign_tensor(tensors, "gap.log_theta", decoder.log_theta);
    model.decoder = std::move(decoder);
  }
  return model;
}

void save_model_file(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path);
  save_model(out, model);
}

Model load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  return load_model(in);
}

}  // namespace gaplap
