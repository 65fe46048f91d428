#include "gaplap/corpus.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace gaplap;
using namespace gaplap::corpus;

namespace {

std::string row(int id, const std::string& form, const std::string& upos, const std::string& head) {
  return std::to_string(id) + "\t" + form + "\t_\t" + upos + "\t_\t_\t" + head + "\tdep\t_\t_\n";
}

Treebank parse(const std::string& text) {
  std::istringstream in(text);
  return parse_conllu(in);
}

Treebank tiny_treebank(int n) {
  Treebank tb;
  for (int i = 0; i < n; ++i)
    tb.sentences.push_back(make_sentence({"a" + std::to_string(i), "b"}, {"NOUN", "VERB"},
                                         {kNoHead, 2, 0}));
  return tb;
}

}  // namespace

TEST_CASE("two-token sentence") {
  const auto tb = parse(row(1, "dog", "NOUN", "2") + row(2, "barks", "VERB", "0") + "\n");
  REQUIRE(tb.sentences.size() == 1);
  const auto& s = tb.sentences[0];
  CHECK(s.size() == 3);
  CHECK(s.is_labeled);
  CHECK(s.tokens[0].form == "<ROOT>");
  CHECK(s.tokens[0].upos == "<ROOT>");
  CHECK_FALSE(s.tokens[0].gold_head.has_value());
  CHECK(s.tokens[1].form == "dog");
  CHECK(s.tokens[2].upos == "VERB");
  CHECK(s.gold_heads() == HeadArray{kNoHead, 2, 0});
}

TEST_CASE("multiword ranges and empty nodes are skipped") {
  const std::string text = "# sent_id = 1\n" +
                           std::string("1-2\tit's\t_\t_\t_\t_\t_\t_\t_\t_\n") +
                           row(1, "it", "PRON", "2") + row(2, "'s", "VERB", "0") +
                           "2.1\tghost\t_\tX\t_\t_\t_\t_\t_\t_\n\n";
  const auto tb = parse(text);
  REQUIRE(tb.sentences.size() == 1);
  CHECK(tb.sentences[0].size() == 3);
  CHECK(tb.sentences[0].gold_heads() == HeadArray{kNoHead, 2, 0});
  std::ostringstream out;
  write_conllu(out, tb);
  CHECK(out.str() == text);
}

TEST_CASE("missing heads mark the sentence unlabeled") {
  auto tb = parse(row(1, "a", "X", "_") + row(2, "b", "X", "_") + "\n" + row(1, "c", "X", "0") +
                  row(2, "d", "X", "_") + "\n");
  REQUIRE(tb.sentences.size() == 2);
  CHECK_FALSE(tb.sentences[0].is_labeled);
  CHECK_FALSE(tb.sentences[1].is_labeled);
  CHECK(tb.sentences[1].gold_heads().empty());
}

TEST_CASE("malformed input reports the line") {
  try {
    parse(row(1, "a", "X", "0") + "2\tb\t_\tX\n");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse(row(1, "a", "X", "5") + "\n"), DataError);
  CHECK_THROWS_AS(parse(row(1, "a", "X", "1") + "\n"), DataError);
  CHECK_THROWS_AS(parse(row(1, "a", "X", "x") + "\n"), DataError);
  CHECK_THROWS_AS(parse(row(2, "a", "X", "0") + "\n"), DataError);
  CHECK_THROWS_AS(read_conllu_file("/nonexistent/file.conllu"), DataError);
}

TEST_CASE("serialize round trip") {
  const std::string text = row(1, "The", "DET", "2") + row(2, "cat", "NOUN", "3") +
                           row(3, "sat", "VERB", "0") + row(4, ".", "PUNCT", "3") + "\n" +
                           row(1, "Hi", "INTJ", "0") + "\n";
  const auto tb = parse(text);
  std::ostringstream out;
  write_conllu(out, tb);
  CHECK(out.str() == text);
  const auto again = parse(out.str());
  REQUIRE(again.sentences.size() == tb.sentences.size());
  for (std::size_t k = 0; k < tb.sentences.size(); ++k) {
    CHECK(again.sentences[k].gold_heads() == tb.sentences[k].gold_heads());
    for (std::size_t i = 0; i < tb.sentences[k].size(); ++i) {
      CHECK(again.sentences[k].tokens[i].form == tb.sentences[k].tokens[i].form);
      CHECK(again.sentences[k].tokens[i].upos == tb.sentences[k].tokens[i].upos);
    }
  }
}

TEST_CASE("non-projective sentences are dropped") {
  Treebank tb = tiny_treebank(2);
  tb.sentences.push_back(make_sentence({"a", "b", "c", "d"}, {"X", "X", "X", "X"},
                                       {kNoHead, 3, 4, 0, 3}));
  CHECK(drop_nonprojective(tb) == 1);
  CHECK(tb.sentences.size() == 2);
}

TEST_CASE("vocabulary thresholds") {
  Treebank tb;
  tb.sentences.push_back(make_sentence({"a", "a", "a", "a", "a", "b"},
                                       {"X", "X", "X", "X", "X", "Y"}));
  const auto v = build_vocab(tb, 2);
  CHECK(v.word_count() == 3);
  CHECK(v.word_id("<ROOT>") == Vocabulary::kRootId);
  CHECK(v.word_id("<UNK>") == Vocabulary::kUnknownId);
  CHECK(v.word_id("a") == 2);
  CHECK(v.word_id("b") == Vocabulary::kUnknownId);
  CHECK(v.word_id("never") == Vocabulary::kUnknownId);
  CHECK(v.pos_id("Y") != Vocabulary::kUnknownId);
  CHECK(v.pos(v.pos_id("Y")) == "Y");
  const auto all = build_vocab(tb, 1);
  CHECK(all.word_count() == 4);
  CHECK(all.word(all.word_id("b")) == "b");
  CHECK_THROWS_AS(build_vocab(tb, 0), ConfigError);
  CHECK_THROWS_AS(build_vocab(Treebank{}, 2), DataError);
  // Ids are dense and the mapping is a bijection.
  for (int id = 0; id < all.word_count(); ++id) CHECK(all.word_id(all.word(id)) == id);
}

TEST_CASE("indexing") {
  Treebank tb;
  tb.sentences.push_back(make_sentence({"a", "b", ","}, {"X", "Y", "PUNCT"}, {kNoHead, 0, 1, 1}));
  const auto v = build_vocab(tb, 1);
  const auto s = index_sentence(tb.sentences[0], v);
  CHECK(s.size() == 4);
  CHECK(s.words[0] == Vocabulary::kRootId);
  CHECK(s.tags[0] == Vocabulary::kRootId);
  CHECK(s.heads == HeadArray{kNoHead, 0, 1, 1});
  CHECK(s.punct == std::vector<bool>{false, false, false, true});
}

TEST_CASE("labeled split") {
  const auto tb = tiny_treebank(10);
  const auto [lab, unl] = split_labeled(tb, 0.1, 4);
  CHECK(lab.sentences.size() == 1);
  CHECK(unl.sentences.size() == 9);
  for (const auto& s : unl.sentences) {
    CHECK_FALSE(s.is_labeled);
    CHECK(s.gold_heads().empty());
  }
  std::multiset<std::string> forms;
  for (const auto* part : {&lab, &unl})
    for (const auto& s : part->sentences) forms.insert(s.tokens[1].form);
  CHECK(forms.size() == 10);
  CHECK(std::set<std::string>(forms.begin(), forms.end()).size() == 10);

  const auto [lab2, unl2] = split_labeled(tb, 0.1, 4);
  CHECK(lab2.sentences[0].tokens[1].form == lab.sentences[0].tokens[1].form);
  const auto [all, none] = split_labeled(tb, 1.0, 4);
  CHECK(all.sentences.size() == 10);
  CHECK(none.sentences.empty());
  CHECK_THROWS_AS(split_labeled(tb, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(split_labeled(tb, 1.5, 1), ConfigError);
}

TEST_CASE("attachment score") {
  std::vector<HeadArray> gold{{kNoHead, 2, 0}};
  CHECK(uas(gold, gold) == 1.0);
  std::vector<HeadArray> half{{kNoHead, 0, 0}};
  CHECK(uas(half, gold) == 0.5);
  std::vector<std::vector<bool>> punct{{false, true, true}};
  CHECK_THROWS_AS(uas(gold, gold, punct, true), DataError);
  std::vector<std::vector<bool>> one{{false, true, false}};
  CHECK(uas(half, gold, one, true) == 1.0);
  CHECK(uas(half, gold, one, false) == 0.5);

  std::vector<HeadArray> g2{{kNoHead, 2, 0}, {kNoHead, 0, 1, 1}};
  std::vector<HeadArray> p2{{kNoHead, 0, 0}, {kNoHead, 0, 1, 2}};
  std::vector<HeadArray> g2r{g2[1], g2[0]}, p2r{p2[1], p2[0]};
  CHECK(uas(p2, g2) == uas(p2r, g2r));
  CHECK(uas(p2, g2) == doctest::Approx(3.0 / 5));
}

TEST_CASE("embedding files") {
  std::istringstream with_header("2 3\nfoo 1 2 3\nbar 0.5 -1 2e-1\n");
  const auto e = read_embeddings(with_header);
  CHECK(e.dim == 3);
  CHECK(e.vectors.at("bar")(2) == doctest::Approx(0.2));
  std::istringstream bare("foo 1 2\nbar 3 4\n");
  const auto b = read_embeddings(bare);
  CHECK(b.dim == 2);
  CHECK(b.vectors.size() == 2);
  std::istringstream ragged("foo 1 2\nbar 3\n");
  CHECK_THROWS_AS(read_embeddings(ragged), DataError);
}
