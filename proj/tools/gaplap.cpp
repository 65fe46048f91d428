// gaplap: train, parse, evaluate and self-check projective dependency parsers.

#include "gaplap/config.hpp"
#include "gaplap/corpus.hpp"
#include "gaplap/model.hpp"
#include "gaplap/selfcheck.hpp"
#include "gaplap/synth.hpp"
#include "gaplap/train.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace {

using namespace gaplap;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitSelfcheck = 5;

void require_readable(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::string("cannot read ") + what + " file '" + path + "'");
}

std::vector<corpus::IndexedSentence> strip(std::vector<corpus::IndexedSentence> s) {
  for (auto& x : s) x.heads.clear();
  return s;
}

int cmd_train(const std::string& config_path, const std::optional<std::string>& mode,
              const std::optional<std::uint64_t>& seed, const std::vector<std::string>& sets) {
  RunConfig config = load_config_file(config_path);
  if (mode) apply_setting(config, "mode", *mode);
  if (seed) config.train.seed = *seed;
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (config.train_path.empty()) throw ConfigError("config does not name a train file");
  if (!(config.labeled_fraction > 0.0 && config.labeled_fraction <= 1.0))
    throw ConfigError("labeled_fraction must lie in (0, 1]");
  require_readable(config.train_path, "train");
  if (!config.dev_path.empty()) require_readable(config.dev_path, "dev");
  if (!config.test_path.empty()) require_readable(config.test_path, "test");
  if (!config.embeddings_path.empty()) require_readable(config.embeddings_path, "embeddings");
  const std::string log_path = config.log_path.empty() ? config.model_path + ".log" : config.log_path;

  corpus::Treebank train_tb = corpus::read_conllu_file(config.train_path);
  if (const auto dropped = corpus::drop_nonprojective(train_tb))
    std::cerr << "dropped " << dropped << " non-projective training sentences\n";
  if (train_tb.sentences.empty()) throw DataError("training file holds no usable sentences");

  const corpus::Vocabulary vocab = corpus::build_vocab(train_tb, config.min_freq);

  corpus::Treebank labeled_tb, unlabeled_tb;
  bool all_labeled = true;
  for (const auto& s : train_tb.sentences) all_labeled = all_labeled && s.is_labeled;
  if (all_labeled) {
    std::tie(labeled_tb, unlabeled_tb) =
        corpus::split_labeled(train_tb, config.labeled_fraction, config.train.seed);
  } else {
    for (const auto& s : train_tb.sentences)
      (s.is_labeled ? labeled_tb : unlabeled_tb).sentences.push_back(s);
  }
  const auto labeled = corpus::index_treebank(labeled_tb, vocab);
  const auto unlabeled = strip(corpus::index_treebank(unlabeled_tb, vocab));
  std::vector<corpus::IndexedSentence> dev;
  if (!config.dev_path.empty()) {
    corpus::Treebank dev_tb = corpus::read_conllu_file(config.dev_path);
    for (const auto& s : dev_tb.sentences)
      if (!s.is_labeled) throw DataError("dev file contains a sentence without gold heads");
    dev = corpus::index_treebank(dev_tb, vocab);
  }
  std::cerr << "labeled " << labeled.size() << ", unlabeled " << unlabeled.size() << ", dev "
            << dev.size() << " sentences; " << vocab.word_count() << " word types\n";

  std::mt19937_64 rng(config.train.seed);
  Model model = initial_model(config.train, vocab, labeled, rng);
  if (!config.embeddings_path.empty()) {
    const auto found = encoder::apply_pretrained(
        model.encoder, vocab, corpus::read_embeddings_file(config.embeddings_path));
    std::cerr << "pretrained vectors for " << found << " word types\n";
  }

  std::ofstream log(log_path, std::ios::binary);
  if (!log) throw ConfigError("cannot write log file '" + log_path + "'");
  TrainResult result = train(config.train, std::move(model), labeled, unlabeled, dev, rng, &log);
  save_model_file(config.model_path, result.best);
  std::cerr << "saved " << config.model_path << " (best epoch " << result.best_epoch << ")\n";

  if (!config.test_path.empty()) {
    const auto test = corpus::index_treebank(corpus::read_conllu_file(config.test_path), vocab);
    std::fprintf(stderr, "test UAS %.4f\n",
                 evaluate_uas(result.best, test, config.train.ignore_punct));
  }
  return 0;
}

int cmd_parse(const std::string& model_path, const std::string& input_path) {
  const Model model = load_model_file(model_path);
  corpus::Treebank tb = corpus::read_conllu_file(input_path);
  for (auto& s : tb.sentences) {
    const HeadArray heads = predict(model, corpus::index_sentence(s, model.vocab));
    for (std::size_t i = 1; i < s.tokens.size(); ++i) s.tokens[i].gold_head = heads[i];
    s.is_labeled = true;
  }
  std::ostringstream out;
  corpus::write_conllu(out, tb);
  std::cout << out.str() << std::flush;
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& pred_path,
             const std::string& gold_path, bool ignore_punct, bool per_sentence) {
  if (model_path.empty() == pred_path.empty())
    throw ConfigError("eval needs exactly one of --model or --pred");
  const corpus::Treebank gold = corpus::read_conllu_file(gold_path);
  std::vector<HeadArray> gold_heads, pred_heads;
  std::vector<std::vector<bool>> punct;
  for (const auto& s : gold.sentences) {
    if (!s.is_labeled) throw DataError("gold file contains a sentence without heads");
    gold_heads.push_back(s.gold_heads());
    std::vector<bool> p(s.size(), false);
    for (std::size_t i = 1; i < s.size(); ++i) p[i] = s.tokens[i].upos == "PUNCT";
    punct.push_back(std::move(p));
  }
  if (!model_path.empty()) {
    const Model model = load_model_file(model_path);
    for (const auto& s : gold.sentences)
      pred_heads.push_back(predict(model, corpus::index_sentence(s, model.vocab)));
  } else {
    const corpus::Treebank pred = corpus::read_conllu_file(pred_path);
    if (pred.sentences.size() != gold.sentences.size())
      throw DataError("prediction and gold files differ in sentence count");
    for (std::size_t k = 0; k < pred.sentences.size(); ++k) {
      const auto& s = pred.sentences[k];
      if (!s.is_labeled) throw DataError("prediction file contains a sentence without heads");
      if (s.size() != gold.sentences[k].size())
        throw DataError("sentence " + std::to_string(k + 1) + " differs in length from gold");
      pred_heads.push_back(s.gold_heads());
    }
  }
  if (per_sentence) {
    for (std::size_t k = 0; k < gold_heads.size(); ++k) {
      int correct = 0, total = 0;
      for (std::size_t i = 1; i < gold_heads[k].size(); ++i) {
        if (ignore_punct && punct[k][i]) continue;
        ++total;
        correct += pred_heads[k][i] == gold_heads[k][i];
      }
      std::printf("%zu\t%d\t%d\n", k + 1, correct, total);
    }
  }
  std::printf("UAS\t%.4f\n", corpus::uas(pred_heads, gold_heads, punct, ignore_punct));
  return 0;
}

int cmd_selfcheck(const selfcheck::Options& options) {
  if (options.max_length > 9) throw ConfigError("selfcheck --max-len must be <= 9");
  if (options.min_length < 2 || options.min_length > options.max_length)
    throw ConfigError("selfcheck --min-len must lie in [2, max-len]");
  if (options.trials < 0) throw ConfigError("selfcheck --trials must be >= 0");
  const auto report = selfcheck::run(options);
  if (report.passed()) {
    std::printf("selfcheck passed: %ld checks\n", report.checks);
    return 0;
  }
  for (const auto& f : report.failures)
    std::fprintf(stderr, "FAIL %s length=%d seed=%llu error=%.3g\n", f.check.c_str(), f.length,
                 static_cast<unsigned long long>(f.seed), f.error);
  std::fprintf(stderr, "selfcheck failed: %zu of %ld checks\n", report.failures.size(),
               report.checks);
  return kExitSelfcheck;
}

int cmd_synth(const synth::SynthConfig& config, const std::string& out_path) {
  const corpus::Treebank tb = synth::synthesize(config);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + out_path + "'");
  corpus::write_conllu(out, tb);
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"Semi-supervised projective dependency parsing"};
  app.require_subcommand(1);

  auto* train_cmd = app.add_subcommand("train", "Train a parser and write a checkpoint");
  std::string config_path;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  train_cmd->add_option("--config", config_path, "Config file")->required();
  train_cmd->add_option("--mode", mode, "gap, lap or crf-supervised");
  train_cmd->add_option("--seed", seed, "Random seed");
  train_cmd->add_option("--set", sets, "Override a config setting (key=value)");

  auto* parse_cmd = app.add_subcommand("parse", "Parse CoNLL-U to standard output");
  std::string model_path, input_path;
  parse_cmd->add_option("--model", model_path, "Checkpoint")->required();
  parse_cmd->add_option("--input", input_path, "CoNLL-U input")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Report unlabeled attachment score");
  std::string eval_model, pred_path, gold_path;
  bool ignore_punct = false, per_sentence = false;
  eval_cmd->add_option("--model", eval_model, "Checkpoint to parse the gold file with");
  eval_cmd->add_option("--pred", pred_path, "Predicted CoNLL-U");
  eval_cmd->add_option("--gold", gold_path, "Gold CoNLL-U")->required();
  eval_cmd->add_flag("--ignore-punct", ignore_punct, "Skip PUNCT tokens");
  eval_cmd->add_flag("--per-sentence", per_sentence, "Print correct/total per sentence");

  auto* check_cmd = app.add_subcommand("selfcheck", "Compare charts against enumeration");
  selfcheck::Options check;
  check_cmd->add_option("--trials", check.trials, "Random matrices per length");
  check_cmd->add_option("--max-len", check.max_length, "Longest sentence incl. ROOT (<= 9)");
  check_cmd->add_option("--min-len", check.min_length, "Shortest sentence incl. ROOT");
  check_cmd->add_option("--seed", check.seed, "Random seed");

  auto* synth_cmd = app.add_subcommand("synth", "Sample a synthetic treebank");
  synth::SynthConfig synth_config;
  std::string out_path;
  synth_cmd->add_option("--sentences", synth_config.sentences)->required();
  synth_cmd->add_option("--vocab", synth_config.vocab)->required();
  synth_cmd->add_option("--out", out_path)->required();
  synth_cmd->add_option("--seed", synth_config.seed);
  synth_cmd->add_option("--min-len", synth_config.min_length);
  synth_cmd->add_option("--max-len", synth_config.max_length);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    return kExitConfig;
  }

  if (*train_cmd) return cmd_train(config_path, mode, seed, sets);
  if (*parse_cmd) return cmd_parse(model_path, input_path);
  if (*eval_cmd) return cmd_eval(eval_model, pred_path, gold_path, ignore_punct, per_sentence);
  if (*check_cmd) return cmd_selfcheck(check);
  return cmd_synth(synth_config, out_path);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const gaplap::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const gaplap::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const gaplap::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
