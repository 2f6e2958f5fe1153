#include "agcn/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "agcn/backbone.hpp"
#include "agcn/error.hpp"

namespace agcn {

const char* to_string(Modality m) { return m == Modality::audio ? "audio" : "visual"; }

Modality parse_modality(const std::string& s) {
  if (s == "audio") return Modality::audio;
  if (s == "visual") return Modality::visual;
  throw ConfigError("unknown modality '" + s + "' (expected audio or visual)");
}

void AgcnConfig::validate() const {
  backbone.validate();
  if (input_h == 0 || input_w == 0) throw ConfigError("model.input_h/input_w must be positive");
  if (num_classes < 2) throw ConfigError("model.num_classes must be at least 2");
  if (gcn_out_channels < 1) throw ConfigError("model.gcn_out_channels must be positive");
  if (gcn_layers < 1) throw ConfigError("model.gcn_layers must be at least 1");
  if (k_nodes < 4 || k_nodes % 4 != 0) {
    throw ConfigError("model.k_nodes=" + std::to_string(k_nodes) + " must be a positive multiple of 4");
  }
  if (strict_node_sweep && (k_nodes < 8 || k_nodes > 24)) {
    throw ConfigError("model.k_nodes=" + std::to_string(k_nodes) +
                      " outside {8,12,16,20,24}; set model.strict_node_sweep = false to override");
  }
  const auto dims = backbone_stage_dims(input_h, input_w);
  if (dims.h[3] * dims.w[3] < 3 * static_cast<std::size_t>(k_nodes)) {
    throw ConfigError("input " + std::to_string(input_h) + "x" + std::to_string(input_w) + " gives a " +
                      std::to_string(dims.h[3]) + "x" + std::to_string(dims.w[3]) +
                      " Res-4 grid, too small for k=" + std::to_string(k_nodes) + " (needs >= 3k positions)");
  }
  if (train.lr0 <= 0.0 || train.lr_decay_factor <= 0.0 || train.lr_decay_every < 1) {
    throw ConfigError("train.lr0, train.lr_decay_factor and train.lr_decay_every must be positive");
  }
  if (train.momentum < 0.0 || train.momentum >= 1.0) throw ConfigError("train.momentum must be in [0,1)");
  if (train.epochs < 1 || train.batch_size < 1) throw ConfigError("train.epochs and train.batch_size must be positive");
}

AgcnConfig AgcnConfig::full_visual(int num_classes) {
  AgcnConfig c;
  c.num_classes = num_classes;
  return c;
}

AgcnConfig AgcnConfig::full_audio(int num_classes) {
  AgcnConfig c;
  c.modality = Modality::audio;
  c.backbone = BackboneConfig::full(1);
  c.input_h = 201;
  c.input_w = 64;
  c.num_classes = num_classes;
  return c;
}

AgcnConfig AgcnConfig::tiny_visual(int num_classes) {
  AgcnConfig c;
  c.backbone = BackboneConfig::tiny(3);
  c.input_h = 48;
  c.input_w = 48;
  c.k_nodes = 8;
  c.gcn_out_channels = 8;
  c.num_classes = num_classes;
  return c;
}

AgcnConfig AgcnConfig::tiny_audio(int num_classes) {
  AgcnConfig c = tiny_visual(num_classes);
  c.modality = Modality::audio;
  c.backbone = BackboneConfig::tiny(1);
  c.input_h = 41;  // 1 s at 16 kHz, hop 400
  c.input_w = 64;
  return c;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long out = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

template <std::size_t N>
std::array<int, N> parse_list(const std::string& key, const std::string& v) {
  std::array<int, N> out{};
  std::stringstream ss(v);
  std::string item;
  std::size_t i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= N) break;
    out[i++] = static_cast<int>(parse_int(key, trim(item)));
  }
  if (i != N || std::getline(ss, item, ',')) {
    throw ConfigError(key + ": expected " + std::to_string(N) + " comma-separated integers");
  }
  return out;
}

template <std::size_t N>
std::string join(const std::array<int, N>& a) {
  std::string s;
  for (std::size_t i = 0; i < N; ++i) s += (i ? "," : "") + std::to_string(a[i]);
  return s;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

AgcnConfig parse_config(std::istream& in, AgcnConfig c) {
  const std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters = {
      {"model.modality", [&](auto&, auto& v) { c.modality = parse_modality(v); }},
      {"model.in_channels", [&](auto& k, auto& v) { c.backbone.in_channels = static_cast<int>(parse_int(k, v)); }},
      {"model.stage_channels", [&](auto& k, auto& v) { c.backbone.stage_channels = parse_list<5>(k, v); }},
      {"model.blocks_per_stage", [&](auto& k, auto& v) { c.backbone.blocks_per_stage = parse_list<4>(k, v); }},
      {"model.block",
       [&](auto& k, auto& v) {
         if (v == "basic") c.backbone.block = BlockKind::basic;
         else if (v == "bottleneck") c.backbone.block = BlockKind::bottleneck;
         else throw ConfigError(k + ": expected basic or bottleneck");
       }},
      {"model.input_h", [&](auto& k, auto& v) { c.input_h = static_cast<std::size_t>(parse_int(k, v)); }},
      {"model.input_w", [&](auto& k, auto& v) { c.input_w = static_cast<std::size_t>(parse_int(k, v)); }},
      {"model.k_nodes", [&](auto& k, auto& v) { c.k_nodes = static_cast<int>(parse_int(k, v)); }},
      {"model.gcn_out_channels", [&](auto& k, auto& v) { c.gcn_out_channels = static_cast<int>(parse_int(k, v)); }},
      {"model.gcn_layers", [&](auto& k, auto& v) { c.gcn_layers = static_cast<int>(parse_int(k, v)); }},
      {"model.num_classes", [&](auto& k, auto& v) { c.num_classes = static_cast<int>(parse_int(k, v)); }},
      {"model.use_graph_branch", [&](auto& k, auto& v) { c.use_graph_branch = parse_bool(k, v); }},
      {"model.strict_node_sweep", [&](auto& k, auto& v) { c.strict_node_sweep = parse_bool(k, v); }},
      {"model.seed", [&](auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(parse_int(k, v)); }},
      {"train.lr0", [&](auto& k, auto& v) { c.train.lr0 = parse_double(k, v); }},
      {"train.momentum", [&](auto& k, auto& v) { c.train.momentum = parse_double(k, v); }},
      {"train.lr_decay_factor", [&](auto& k, auto& v) { c.train.lr_decay_factor = parse_double(k, v); }},
      {"train.lr_decay_every", [&](auto& k, auto& v) { c.train.lr_decay_every = static_cast<int>(parse_int(k, v)); }},
      {"train.epochs", [&](auto& k, auto& v) { c.train.epochs = static_cast<int>(parse_int(k, v)); }},
      {"train.batch_size", [&](auto& k, auto& v) { c.train.batch_size = static_cast<int>(parse_int(k, v)); }},
      {"data.train_n", [&](auto& k, auto& v) { c.data.train_n = static_cast<std::size_t>(parse_int(k, v)); }},
      {"data.test_n", [&](auto& k, auto& v) { c.data.test_n = static_cast<std::size_t>(parse_int(k, v)); }},
      {"data.seed", [&](auto& k, auto& v) { c.data.seed = static_cast<std::uint64_t>(parse_int(k, v)); }},
  };

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("config line " + std::to_string(lineno) + ": unknown key " + key);
    it->second(key, value);
  }
  return c;
}

AgcnConfig load_config(const std::filesystem::path& path, AgcnConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, std::move(base));
}

std::string config_to_text(const AgcnConfig& c) {
  std::ostringstream os;
  os << "model.modality = " << to_string(c.modality) << '\n'
     << "model.in_channels = " << c.backbone.in_channels << '\n'
     << "model.stage_channels = " << join(c.backbone.stage_channels) << '\n'
     << "model.blocks_per_stage = " << join(c.backbone.blocks_per_stage) << '\n'
     << "model.block = " << (c.backbone.block == BlockKind::basic ? "basic" : "bottleneck") << '\n'
     << "model.input_h = " << c.input_h << '\n'
     << "model.input_w = " << c.input_w << '\n'
     << "model.k_nodes = " << c.k_nodes << '\n'
     << "model.gcn_out_channels = " << c.gcn_out_channels << '\n'
     << "model.gcn_layers = " << c.gcn_layers << '\n'
     << "model.num_classes = " << c.num_classes << '\n'
     << "model.use_graph_branch = " << (c.use_graph_branch ? "true" : "false") << '\n'
     << "model.strict_node_sweep = " << (c.strict_node_sweep ? "true" : "false") << '\n'
     << "model.seed = " << c.seed << '\n'
     << "train.lr0 = " << fmt_double(c.train.lr0) << '\n'
     << "train.momentum = " << fmt_double(c.train.momentum) << '\n'
     << "train.lr_decay_factor = " << fmt_double(c.train.lr_decay_factor) << '\n'
     << "train.lr_decay_every = " << c.train.lr_decay_every << '\n'
     << "train.epochs = " << c.train.epochs << '\n'
     << "train.batch_size = " << c.train.batch_size << '\n'
     << "data.train_n = " << c.data.train_n << '\n'
     << "data.test_n = " << c.data.test_n << '\n'
     << "data.seed = " << c.data.seed << '\n';
  return os.str();
}

void apply_env_overrides(AgcnConfig& config) {
  if (const char* s = std::getenv("AGCN_SEED"); s && *s) {
    config.seed = static_cast<std::uint64_t>(parse_int("AGCN_SEED", s));
  }
}

}  // namespace agcn
