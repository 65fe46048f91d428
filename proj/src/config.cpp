#include "gaplap/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gaplap {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("setting '" + std::string(key) + "': cannot parse '" + std::string(value) +
                      "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("setting '" + std::string(key) + "': expected a boolean, got '" +
                    std::string(value) + "'");
}

std::string resolve(const std::string& base_dir, std::string_view value) {
  std::filesystem::path p{std::string(value)};
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (std::filesystem::path(base_dir) / p).string();
}

}  // namespace

void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
  auto& t = c.train;
  auto& d = t.dims;
  auto positive = [&](Index v) {
    if (v < 1) throw ConfigError("setting '" + std::string(key) + "' must be >= 1");
    return v;
  };
  if (key == "mode") t.mode = parse_mode(value);
  else if (key == "train") c.train_path = value;
  else if (key == "dev") c.dev_path = value;
  else if (key == "test") c.test_path = value;
  else if (key == "embeddings") c.embeddings_path = value;
  else if (key == "model") c.model_path = value;
  else if (key == "log") c.log_path = value;
  else if (key == "word_dim") d.word_dim = positive(parse_number<Index>(key, value));
  else if (key == "pos_dim") d.pos_dim = positive(parse_number<Index>(key, value));
  else if (key == "hidden_dim") d.hidden_dim = positive(parse_number<Index>(key, value));
  else if (key == "arc_dim") d.arc_dim = positive(parse_number<Index>(key, value));
  else if (key == "latent_dim") d.latent_dim = positive(parse_number<Index>(key, value));
  else if (key == "learning_rate") t.learning_rate = parse_number<double>(key, value);
  else if (key == "epochs") t.epochs = parse_number<int>(key, value);
  else if (key == "patience") t.patience = parse_number<int>(key, value);
  else if (key == "seed") t.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "sigma_start") t.sigma_start = parse_number<double>(key, value);
  else if (key == "sigma_end") t.sigma_end = parse_number<double>(key, value);
  else if (key == "init_smoothing") t.init_smoothing = parse_number<double>(key, value);
  else if (key == "mstep_smoothing") t.mstep_smoothing = parse_number<double>(key, value);
  else if (key == "mix_labeled_counts") t.mix_labeled_counts = parse_bool(key, value);
  else if (key == "samples") t.samples = parse_number<int>(key, value);
  else if (key == "kl_weight") t.kl_weight = parse_number<double>(key, value);
  else if (key == "ignore_punct") t.ignore_punct = parse_bool(key, value);
  else if (key == "single_root") t.tree.single_root = parse_bool(key, value);
  else if (key == "labeled_fraction") c.labeled_fraction = parse_number<double>(key, value);
  else if (key == "min_freq") c.min_freq = parse_number<int>(key, value);
  else throw ConfigError("unknown setting '" + std::string(key) + "'");

  if (t.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (t.patience < 0) throw ConfigError("patience must be >= 0");
  if (t.samples < 1) throw ConfigError("samples must be >= 1");
  if (!(t.learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
}

void apply_config(RunConfig& config, std::istream& in, const std::string& base_dir) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key == "train" || key == "dev" || key == "test" || key == "embeddings" || key == "model" ||
        key == "log")
      value = resolve(base_dir, value);
    try {
      apply_setting(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  RunConfig config;
  apply_config(config, in, std::filesystem::path(path).parent_path().string());
  return config;
}

std::string describe(const RunConfig& c) {
  std::ostringstream out;
  const auto& t = c.train;
  const auto& d = t.dims;
  out << "mode = " << to_string(t.mode) << '\n'
      << "train = " << c.train_path << '\n'
      << "dev = " << c.dev_path << '\n'
      << "test = " << c.test_path << '\n'
      << "embeddings = " << c.embeddings_path << '\n'
      << "model = " << c.model_path << '\n'
      << "log = " << c.log_path << '\n'
      << "word_dim = " << d.word_dim << '\n'
      << "pos_dim = " << d.pos_dim << '\n'
      << "hidden_dim = " << d.hidden_dim << '\n'
      << "arc_dim = " << d.arc_dim << '\n'
      << "latent_dim = " << d.latent_dim << '\n'
      << "learning_rate = " << t.learning_rate << '\n'
      << "epochs = " << t.epochs << '\n'
      << "patience = " << t.patience << '\n'
      << "seed = " << t.seed << '\n'
      << "sigma_start = " << t.sigma_start << '\n'
      << "sigma_end = " << t.sigma_end << '\n'
      << "init_smoothing = " << t.init_smoothing << '\n'
      << "mstep_smoothing = " << t.mstep_smoothing << '\n'
      << "mix_labeled_counts = " << (t.mix_labeled_counts ? "true" : "false") << '\n'
      << "samples = " << t.samples << '\n'
      << "kl_weight = " << t.kl_weight << '\n'
      << "ignore_punct = " << (t.ignore_punct ? "true" : "false") << '\n'
      << "single_root = " << (t.tree.single_root ? "true" : "false") << '\n'
      << "labeled_fraction = " << c.labeled_fraction << '\n'
      << "min_freq = " << c.min_freq << '\n';
  return out.str();
}

}  // namespace gaplap
