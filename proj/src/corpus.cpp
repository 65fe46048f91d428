#include "gaplap/corpus.hpp"

#include "gaplap/chart.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

namespace gaplap::corpus {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

std::optional<int> parse_int(std::string_view s) {
  int value = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::string line_error(std::size_t line_no, const std::string& what) {
  return "line " + std::to_string(line_no) + ": " + what;
}

Token root_token() {
  return Token{std::string(kRootSymbol), std::string(kRootSymbol), std::nullopt, {}};
}

struct PendingSentence {
  Sentence sentence;
  std::vector<std::size_t> token_lines;
  bool missing_head = false;

  bool empty() const { return sentence.tokens.size() <= 1; }
};

void finish(PendingSentence& pending, Treebank& out) {
  if (pending.empty()) {
    pending = PendingSentence{};
    return;
  }
  auto& s = pending.sentence;
  const int n = static_cast<int>(s.tokens.size());
  if (pending.missing_head) {
    for (auto& tok : s.tokens) tok.gold_head.reset();
    s.is_labeled = false;
  } else {
    for (int i = 1; i < n; ++i) {
      const int h = *s.tokens[i].gold_head;
      if (h < 0 || h >= n || h == i)
        throw DataError(line_error(pending.token_lines[i], "HEAD " + std::to_string(h) +
                                                               " out of range for sentence of " +
                                                               std::to_string(n - 1) + " words"));
    }
    s.is_labeled = true;
  }
  out.sentences.push_back(std::move(s));
  pending = PendingSentence{};
}

}  // namespace

HeadArray Sentence::gold_heads() const {
  HeadArray heads(tokens.size(), kNoHead);
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    if (!tokens[i].gold_head) return {};
    heads[i] = *tokens[i].gold_head;
  }
  return heads;
}

Treebank parse_conllu(std::istream& in) {
  Treebank out;
  PendingSentence pending;
  pending.sentence.tokens.push_back(root_token());
  pending.token_lines.push_back(0);

  auto reset = [&] {
    finish(pending, out);
    pending.sentence.tokens.push_back(root_token());
    pending.token_lines.push_back(0);
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      reset();
      continue;
    }
    if (line[0] == '#') {
      pending.sentence.lines.push_back({line, -1});
      continue;
    }
    auto cols = split_tabs(line);
    if (cols.size() != 10)
      throw DataError(line_error(line_no, "expected 10 tab-separated columns, found " +
                                              std::to_string(cols.size())));
    if (cols[0].find_first_of("-.") != std::string::npos) {
      pending.sentence.lines.push_back({line, -1});
      continue;
    }
    const int expected = static_cast<int>(pending.sentence.tokens.size());
    const auto id = parse_int(cols[0]);
    if (!id || *id != expected)
      throw DataError(line_error(line_no, "token ID '" + cols[0] + "' is not " +
                                              std::to_string(expected)));
    Token tok;
    tok.form = cols[1];
    tok.upos = cols[3];
    if (cols[6] == "_") {
      pending.missing_head = true;
    } else {
      const auto head = parse_int(cols[6]);
      if (!head) throw DataError(line_error(line_no, "HEAD '" + cols[6] + "' is not an integer"));
      tok.gold_head = *head;
    }
    tok.columns = std::move(cols);
    pending.sentence.lines.push_back({line, expected});
    pending.sentence.tokens.push_back(std::move(tok));
    pending.token_lines.push_back(line_no);
  }
  finish(pending, out);
  return out;
}

Treebank read_conllu_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return parse_conllu(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_conllu(std::ostream& out, const Treebank& treebank) {
  auto token_line = [](const Token& tok) {
    std::string text;
    for (std::size_t c = 0; c < tok.columns.size(); ++c) {
      if (c) text += '\t';
      text += c == 6 ? (tok.gold_head ? std::to_string(*tok.gold_head) : std::string("_"))
                     : tok.columns[c];
    }
    return text;
  };
  for (const auto& s : treebank.sentences) {
    if (s.lines.empty()) {
      for (std::size_t i = 1; i < s.tokens.size(); ++i) out << token_line(s.tokens[i]) << '\n';
    } else {
      for (const auto& line : s.lines)
        out << (line.token < 0 ? line.text : token_line(s.tokens[line.token])) << '\n';
    }
    out << '\n';
  }
}

std::size_t drop_nonprojective(Treebank& treebank) {
  const auto before = treebank.sentences.size();
  std::erase_if(treebank.sentences, [](const Sentence& s) {
    return s.is_labeled && !chart::is_projective_tree(s.gold_heads());
  });
  return before - treebank.sentences.size();
}

Sentence make_sentence(const std::vector<std::string>& forms, const std::vector<std::string>& upos,
                       const HeadArray& heads) {
  if (forms.empty() || forms.size() != upos.size())
    throw ConfigError("make_sentence: forms and tags must be non-empty and aligned");
  if (!heads.empty() && heads.size() != forms.size() + 1)
    throw ConfigError("make_sentence: heads must include the ROOT slot");
  Sentence s;
  s.tokens.push_back(root_token());
  for (std::size_t i = 0; i < forms.size(); ++i) {
    Token tok;
    tok.form = forms[i];
    tok.upos = upos[i];
    if (!heads.empty()) tok.gold_head = heads[i + 1];
    tok.columns = {std::to_string(i + 1), forms[i], "_", upos[i], "_", "_", "_", "_", "_", "_"};
    s.tokens.push_back(std::move(tok));
  }
  s.is_labeled = !heads.empty();
  return s;
}

Vocabulary::Vocabulary() : Vocabulary({}, {}) {}

Vocabulary::Vocabulary(std::vector<std::string> words, std::vector<std::string> tags) {
  auto with_reserved = [](std::vector<std::string> entries) {
    std::vector<std::string> out{std::string(kRootSymbol), std::string(kUnknownSymbol)};
    for (auto& e : entries)
      if (e != kRootSymbol && e != kUnknownSymbol) out.push_back(std::move(e));
    return out;
  };
  words_ = with_reserved(std::move(words));
  tags_ = with_reserved(std::move(tags));
  for (std::size_t i = 0; i < words_.size(); ++i)
    if (!word_index_.emplace(words_[i], static_cast<int>(i)).second)
      throw DataError("duplicate vocabulary word '" + words_[i] + "'");
  for (std::size_t i = 0; i < tags_.size(); ++i)
    if (!tag_index_.emplace(tags_[i], static_cast<int>(i)).second)
      throw DataError("duplicate vocabulary tag '" + tags_[i] + "'");
}

int Vocabulary::word_id(std::string_view form) const {
  auto it = word_index_.find(std::string(form));
  return it == word_index_.end() ? kUnknownId : it->second;
}

int Vocabulary::pos_id(std::string_view tag) const {
  auto it = tag_index_.find(std::string(tag));
  return it == tag_index_.end() ? kUnknownId : it->second;
}

Vocabulary build_vocab(const Treebank& treebank, int min_freq) {
  if (min_freq < 1) throw ConfigError("min_freq must be >= 1");
  if (treebank.sentences.empty()) throw DataError("cannot build a vocabulary from an empty treebank");
  std::map<std::string, int> word_freq;
  std::map<std::string, int> tag_freq;
  for (const auto& s : treebank.sentences) {
    for (std::size_t i = 1; i < s.tokens.size(); ++i) {
      ++word_freq[s.tokens[i].form];
      ++tag_freq[s.tokens[i].upos];
    }
  }
  std::vector<std::string> words;
  for (const auto& [w, n] : word_freq)
    if (n >= min_freq) words.push_back(w);
  std::vector<std::string> tags;
  for (const auto& [t, n] : tag_freq) tags.push_back(t);
  return Vocabulary(std::move(words), std::move(tags));
}

IndexedSentence index_sentence(const Sentence& sentence, const Vocabulary& vocab) {
  IndexedSentence out;
  out.words.reserve(sentence.size());
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    const auto& tok = sentence.tokens[i];
    out.words.push_back(i == 0 ? Vocabulary::kRootId : vocab.word_id(tok.form));
    out.tags.push_back(i == 0 ? Vocabulary::kRootId : vocab.pos_id(tok.upos));
    out.punct.push_back(i > 0 && tok.upos == "PUNCT");
  }
  if (sentence.is_labeled) out.heads = sentence.gold_heads();
  return out;
}

std::vector<IndexedSentence> index_treebank(const Treebank& treebank, const Vocabulary& vocab) {
  std::vector<IndexedSentence> out;
  out.reserve(treebank.sentences.size());
  for (const auto& s : treebank.sentences) out.push_back(index_sentence(s, vocab));
  return out;
}

std::pair<Treebank, Treebank> split_labeled(const Treebank& treebank, double fraction,
                                            std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ConfigError("labeled fraction must lie in (0, 1]");
  for (const auto& s : treebank.sentences)
    if (!s.is_labeled) throw DataError("split_labeled needs a fully annotated treebank");

  const std::size_t n = treebank.sentences.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  std::pair<Treebank, Treebank> out;
  for (std::size_t i = 0; i < n; ++i) {
    Sentence s = treebank.sentences[order[i]];
    if (i < keep) {
      out.first.sentences.push_back(std::move(s));
    } else {
      for (auto& tok : s.tokens) tok.gold_head.reset();
      s.is_labeled = false;
      out.second.sentences.push_back(std::move(s));
    }
  }
  return out;
}

double uas(std::span<const HeadArray> predicted, std::span<const HeadArray> gold,
           std::span<const std::vector<bool>> punct, bool ignore_punct) {
  if (predicted.size() != gold.size()) throw ConfigError("uas: sentence counts differ");
  if (ignore_punct && punct.size() != gold.size())
    throw ConfigError("uas: punctuation mask required when ignoring punctuation");
  std::size_t correct = 0;
  std::size_t total = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (predicted[s].size() != gold[s].size())
      throw ConfigError("uas: sentence " + std::to_string(s) + " has mismatched length");
    for (std::size_t t = 1; t < gold[s].size(); ++t) {
      if (ignore_punct && punct[s][t]) continue;
      ++total;
      if (predicted[s][t] == gold[s][t]) ++correct;
    }
  }
  if (total == 0) throw DataError("uas: no scorable tokens");
  return static_cast<double>(correct) / static_cast<double>(total);
}

Embeddings read_embeddings(std::istream& in) {
  Embeddings out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> items;
    for (std::string item; fields >> item;) items.push_back(item);
    if (items.empty()) continue;
    if (line_no == 1 && items.size() == 2 && parse_int(items[0]) && parse_int(items[1])) continue;
    const auto dim = static_cast<Index>(items.size() - 1);
    if (dim == 0) throw DataError(line_error(line_no, "embedding entry has no values"));
    if (out.dim == 0) out.dim = dim;
    if (dim != out.dim)
      throw DataError(line_error(line_no, "embedding has " + std::to_string(dim) +
                                              " values, expected " + std::to_string(out.dim)));
    Vector<double> v(dim);
    for (Index d = 0; d < dim; ++d) {
      const auto& text = items[static_cast<std::size_t>(d + 1)];
      char* end = nullptr;
      v(d) = std::strtod(text.c_str(), &end);
      if (end != text.c_str() + text.size() || !std::isfinite(v(d)))
        throw DataError(line_error(line_no, "bad embedding value '" + text + "'"));
    }
    out.vectors[items[0]] = std::move(v);
  }
  return out;
}

Embeddings read_embeddings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_embeddings(in);
}

}  // namespace gaplap::corpus
