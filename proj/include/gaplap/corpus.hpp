#pragma once

// CoNLL-U ingestion, vocabularies, labeled/unlabeled splits and UAS.

#include "gaplap/common.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace gaplap::corpus {

inline constexpr std::string_view kRootSymbol = "<ROOT>";
inline constexpr std::string_view kUnknownSymbol = "<UNK>";

struct Token {
  std::string form;
  std::string upos;
  std::optional<int> gold_head;
  // The ten raw CoNLL-U fields; empty for the synthetic ROOT token.
  std::vector<std::string> columns;
};

// A line of the original sentence block. token >= 1 points at a token;
// comments, multiword ranges and empty nodes keep token == -1.
struct RawLine {
  std::string text;
  int token = -1;
};

struct Sentence {
  std::vector<Token> tokens;  // tokens[0] is ROOT
  bool is_labeled = false;
  std::vector<RawLine> lines;

  std::size_t size() const { return tokens.size(); }
  HeadArray gold_heads() const;
};

struct Treebank {
  std::vector<Sentence> sentences;
};

/// Reads CoNLL-U text. Throws DataError with the offending line number.
Treebank parse_conllu(std::istream& in);
Treebank read_conllu_file(const std::string& path);

/// Writes CoNLL-U; the HEAD column is taken from Token::gold_head ("_" when
/// absent). Other columns and non-token lines are reproduced verbatim.
void write_conllu(std::ostream& out, const Treebank& treebank);

/// Drops labeled sentences whose gold tree is not projective. Returns the
/// number dropped.
std::size_t drop_nonprojective(Treebank& treebank);

Sentence make_sentence(const std::vector<std::string>& forms, const std::vector<std::string>& upos,
                       const HeadArray& heads = {});

class Vocabulary {
 public:
  static constexpr int kRootId = 0;
  static constexpr int kUnknownId = 1;

  Vocabulary();
  Vocabulary(std::vector<std::string> words, std::vector<std::string> tags);

  int word_id(std::string_view form) const;
  int pos_id(std::string_view tag) const;
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  const std::string& pos(int id) const { return tags_.at(static_cast<std::size_t>(id)); }
  Index word_count() const { return static_cast<Index>(words_.size()); }
  Index pos_count() const { return static_cast<Index>(tags_.size()); }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::string>& tags() const { return tags_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.words_ == b.words_ && a.tags_ == b.tags_;
  }

 private:
  std::vector<std::string> words_;
  std::vector<std::string> tags_;
  std::unordered_map<std::string, int> word_index_;
  std::unordered_map<std::string, int> tag_index_;
};

/// Words seen fewer than min_freq times resolve to <UNK>; tags are all kept.
Vocabulary build_vocab(const Treebank& treebank, int min_freq = 2);

// A sentence resolved to vocabulary ids, ready for the encoder.
struct IndexedSentence {
  std::vector<int> words;
  std::vector<int> tags;
  HeadArray heads;           // empty when unlabeled
  std::vector<bool> punct;   // upos == PUNCT

  Index size() const { return static_cast<Index>(words.size()); }
  bool labeled() const { return !heads.empty(); }
};

IndexedSentence index_sentence(const Sentence& sentence, const Vocabulary& vocab);
std::vector<IndexedSentence> index_treebank(const Treebank& treebank, const Vocabulary& vocab);

/// Deterministic shuffle, then the first ceil(fraction * N) sentences keep
/// their trees and the rest are stripped.
std::pair<Treebank, Treebank> split_labeled(const Treebank& treebank, double fraction,
                                            std::uint64_t seed);

/// Unlabeled attachment score over non-ROOT tokens. With ignore_punct the
/// tokens marked in punct are excluded.
double uas(std::span<const HeadArray> predicted, std::span<const HeadArray> gold,
           std::span<const std::vector<bool>> punct = {}, bool ignore_punct = false);

// word -> vector, read from "word v1 ... vD" lines.
struct Embeddings {
  Index dim = 0;
  std::map<std::string, Vector<double>> vectors;
};

Embeddings read_embeddings(std::istream& in);
Embeddings read_embeddings_file(const std::string& path);

}  // namespace gaplap::corpus
