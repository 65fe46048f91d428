#include "gaplap/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>

namespace gaplap::synth {

namespace {

enum Tag { kNoun, kVerb, kAdj, kDet, kAdp, kAdv, kPron, kTagCount };

constexpr std::array<const char*, kTagCount> kTagNames = {"NOUN", "VERB", "ADJ", "DET",
                                                          "ADP",  "ADV",  "PRON"};
// Share of the vocabulary per tag.
constexpr std::array<double, kTagCount> kTagShare = {0.34, 0.2, 0.1, 0.08, 0.12, 0.08, 0.08};

// Which child tags a head tag may take, and on which side (-1 left, +1 right,
// 0 either, chosen per draw).
struct ChildRule {
  Tag child;
  int side;
};

const std::vector<ChildRule>& child_rules(Tag head) {
  static const std::array<std::vector<ChildRule>, kTagCount> rules = {{
      /* NOUN */ {{kDet, -1}, {kAdj, -1}, {kAdp, +1}},
      /* VERB */ {{kNoun, 0}, {kPron, -1}, {kAdv, 0}, {kAdp, +1}},
      /* ADJ  */ {{kAdv, -1}},
      /* DET  */ {},
      /* ADP  */ {{kNoun, +1}},
      /* ADV  */ {},
      /* PRON */ {},
  }};
  return rules[head];
}

// Probability of attaching another child, by head tag.
constexpr std::array<double, kTagCount> kContinue = {0.5, 0.65, 0.2, 0.0, 1.0, 0.0, 0.0};
constexpr std::array<int, kTagCount> kMaxChildren = {3, 4, 1, 0, 1, 0, 0};

struct Grammar {
  std::vector<Tag> word_tag;  // index 0 is ROOT
  // Planted modifier distribution per head word: candidate words and weights.
  std::vector<std::vector<int>> candidates;
  std::vector<std::discrete_distribution<int>> choose;
};

Grammar plant(int vocab, std::mt19937_64& rng) {
  Grammar g;
  g.word_tag.push_back(kVerb);  // ROOT slot; only generates verbs
  std::vector<std::vector<int>> by_tag(kTagCount);
  int assigned = 0;
  for (int tag = 0; tag < kTagCount; ++tag) {
    int n = std::max(1, static_cast<int>(std::lround(kTagShare[tag] * vocab)));
    if (tag == kTagCount - 1) n = std::max(1, vocab - assigned);
    for (int i = 0; i < n && assigned < vocab; ++i, ++assigned) {
      g.word_tag.push_back(static_cast<Tag>(tag));
      by_tag[tag].push_back(static_cast<int>(g.word_tag.size()) - 1);
    }
  }

  std::gamma_distribution<double> gamma(0.5, 1.0);
  const int total = static_cast<int>(g.word_tag.size());
  g.candidates.resize(static_cast<std::size_t>(total));
  g.choose.resize(static_cast<std::size_t>(total));
  for (int h = 0; h < total; ++h) {
    std::vector<int> pool;
    if (h == 0) {
      pool = by_tag[kVerb];
    } else {
      for (const auto& rule : child_rules(g.word_tag[h]))
        pool.insert(pool.end(), by_tag[rule.child].begin(), by_tag[rule.child].end());
    }
    if (pool.empty()) continue;
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(std::min<std::size_t>(pool.size(), 5));
    std::vector<double> weights;
    for (std::size_t i = 0; i < pool.size(); ++i) weights.push_back(gamma(rng) + 1e-3);
    g.candidates[h] = pool;
    g.choose[h] = std::discrete_distribution<int>(weights.begin(), weights.end());
  }
  return g;
}

struct Node {
  int word;
  std::vector<Node> left;   // nearest first
  std::vector<Node> right;  // nearest first
};

Node grow(Grammar& g, int word, int depth, std::mt19937_64& rng, int& size) {
  Node node{word, {}, {}};
  const Tag tag = g.word_tag[word];
  if (word == 0 || depth > 5 || g.candidates[word].empty()) return node;
  std::bernoulli_distribution more(kContinue[tag]);
  std::bernoulli_distribution coin(0.5);
  for (int k = 0; k < kMaxChildren[tag] && size < 64 && more(rng); ++k) {
    const int child = g.candidates[word][static_cast<std::size_t>(g.choose[word](rng))];
    int side = +1;
    for (const auto& rule : child_rules(tag))
      if (rule.child == g.word_tag[child]) side = rule.side;
    if (side == 0) side = coin(rng) ? -1 : +1;
    ++size;
    (side < 0 ? node.left : node.right).push_back(grow(g, child, depth + 1, rng, size));
  }
  return node;
}

}  // namespace

corpus::Treebank synthesize(const SynthConfig& config) {
  if (config.sentences < 0) throw ConfigError("synth: sentence count must be >= 0");
  if (config.vocab < kTagCount)
    throw ConfigError("synth: vocabulary must hold at least " + std::to_string(kTagCount) +
                      " words");
  if (config.min_length < 1 || config.max_length < config.min_length)
    throw ConfigError("synth: invalid length range");

  std::mt19937_64 rng(config.seed);
  Grammar g = plant(config.vocab, rng);
  corpus::Treebank out;
  int attempts = 0;
  while (static_cast<int>(out.sentences.size()) < config.sentences) {
    if (++attempts > 1000 * (config.sentences + 1))
      throw ConfigError("synth: length range is too restrictive for the planted grammar");
    int size = 0;
    Node root{0, {}, {}};
    std::bernoulli_distribution second(0.05);
    const int roots = second(rng) ? 2 : 1;
    for (int r = 0; r < roots; ++r) {
      const int verb = g.candidates[0][static_cast<std::size_t>(g.choose[0](rng))];
      ++size;
      root.right.push_back(grow(g, verb, 1, rng, size));
    }
    if (size < config.min_length || size > config.max_length) continue;

    // Surface order is an in-order walk; projectivity follows.
    std::vector<const Node*> surface;
    std::function<void(const Node&)> inorder = [&](const Node& node) {
      for (auto it = node.left.rbegin(); it != node.left.rend(); ++it) inorder(*it);
      surface.push_back(&node);
      for (const auto& child : node.right) inorder(child);
    };
    inorder(root);
    std::map<const Node*, int> position;
    for (std::size_t i = 0; i < surface.size(); ++i) position[surface[i]] = static_cast<int>(i);
    HeadArray tree(surface.size(), kNoHead);
    for (const Node* n : surface) {
      for (const auto& c : n->left) tree[static_cast<std::size_t>(position[&c])] = position[n];
      for (const auto& c : n->right) tree[static_cast<std::size_t>(position[&c])] = position[n];
    }

    std::vector<std::string> forms, tags;
    for (std::size_t i = 1; i < surface.size(); ++i) {
      forms.push_back("w" + std::to_string(surface[i]->word - 1));
      tags.push_back(kTagNames[g.word_tag[surface[i]->word]]);
    }
    out.sentences.push_back(corpus::make_sentence(forms, tags, tree));
  }
  return out;
}

}  // namespace gaplap::synth
