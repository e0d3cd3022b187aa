#include "kga_cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "kga/discriminator.hpp"
#include "kga/rng.hpp"

namespace kga::cli {

std::string to_string(Supervision mode) {
  switch (mode) {
    case Supervision::Unsupervised: return "unsupervised";
    case Supervision::Weak: return "weak";
    case Supervision::Supervised: return "supervised";
  }
  return "?";
}

Supervision parse_supervision(const std::string& name) {
  if (name == "unsupervised") return Supervision::Unsupervised;
  if (name == "weak") return Supervision::Weak;
  if (name == "supervised") return Supervision::Supervised;
  throw ConfigError("unknown mode '" + name + "' (expected unsupervised, weak, supervised)");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("key '" + key + "': cannot parse '" + text + "' as a number");
  }
  return value;
}

std::size_t as_size(const std::string& k, const std::string& v) { return parse_number<std::size_t>(k, v); }
double as_double(const std::string& k, const std::string& v) { return parse_number<double>(k, v); }

std::string baseline_name(Baseline b) { return b == Baseline::None ? "none" : "batch-mean"; }
Baseline parse_baseline(const std::string& v) {
  if (v == "none") return Baseline::None;
  if (v == "batch-mean") return Baseline::BatchMean;
  throw ConfigError("unknown baseline '" + v + "' (expected none, batch-mean)");
}

std::string mi_update_name(MiUpdate m) { return m == MiUpdate::Summed ? "summed" : "alternating"; }
MiUpdate parse_mi_update(const std::string& v) {
  if (v == "summed") return MiUpdate::Summed;
  if (v == "alternating") return MiUpdate::Alternating;
  throw ConfigError("unknown mi_update '" + v + "' (expected summed, alternating)");
}

// Library parsers throw ArgumentError; surface those as config errors naming the key.
template <class F>
auto rethrow_as_config(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const ArgumentError& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define KGA_SIZE(name, member)                                                  \
  Field{name, [](const RunConfig& c) { return std::to_string(c.member); },      \
        [](RunConfig& c, const std::string& v) { c.member = as_size(name, v); }}
#define KGA_REAL(name, member)                                                  \
  Field{name, [](const RunConfig& c) { return fmt(c.member); },                 \
        [](RunConfig& c, const std::string& v) { c.member = as_double(name, v); }}
#define KGA_PATH(name, member)                                                  \
  Field{name, [](const RunConfig& c) { return c.member.string(); },             \
        [](RunConfig& c, const std::string& v) { c.member = v; }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
            [](RunConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>("seed", v); }},
      KGA_SIZE("threads", threads),
      Field{"mode", [](const RunConfig& c) { return to_string(c.mode); },
            [](RunConfig& c, const std::string& v) { c.mode = parse_supervision(v); }},
      KGA_PATH("source", source),
      KGA_PATH("target", target),
      KGA_PATH("seeds", seeds),
      KGA_PATH("test", test),
      KGA_PATH("source_embedding", source_embedding),
      KGA_PATH("target_embedding", target_embedding),
      KGA_PATH("checkpoint", checkpoint),
      KGA_PATH("out_dir", out_dir),
      KGA_REAL("validation_fraction", validation_fraction),
      KGA_SIZE("top", top),

      Field{"model", [](const RunConfig& c) { return to_string(c.embed.kind); },
            [](RunConfig& c, const std::string& v) {
              c.embed.kind = rethrow_as_config("model", [&] { return parse_model_kind(v); });
            }},
      KGA_SIZE("dim", embed.dim),
      KGA_REAL("margin", embed.margin),
      KGA_SIZE("negatives", embed.negatives_per_positive),
      KGA_SIZE("epochs", embed.epochs),
      KGA_SIZE("embed_batch", embed.batch_size),
      KGA_REAL("embed_lr", embed.learning_rate),

      Field{"reward", [](const RunConfig& c) { return to_string(c.train.reward); },
            [](RunConfig& c, const std::string& v) {
              c.train.reward = rethrow_as_config("reward", [&] { return parse_reward_kind(v); });
            }},
      Field{"fake_mode", [](const RunConfig& c) { return to_string(c.train.fake_mode); },
            [](RunConfig& c, const std::string& v) {
              c.train.fake_mode = rethrow_as_config("fake_mode", [&] { return parse_fake_mode(v); });
            }},
      KGA_REAL("mi_weight", train.mi_weight),
      KGA_SIZE("batch", train.batch_size),
      KGA_SIZE("mi_batch", train.mi_batch_size),
      KGA_SIZE("max_steps", train.max_steps),
      KGA_REAL("align_lr", train.align_lr),
      KGA_REAL("disc_lr", train.disc_lr),
      KGA_REAL("mi_lr", train.mi_lr),
      KGA_REAL("pretrain_lr", train.pretrain_lr),
      KGA_SIZE("disc_pretrain_steps", train.disc_pretrain_steps),
      KGA_SIZE("mi_pretrain_steps", train.mi_pretrain_steps),
      KGA_SIZE("hidden", train.hidden_dim),
      KGA_REAL("eta", train.eta),
      KGA_REAL("init_noise", train.init_noise),
      Field{"clip_norm",
            [](const RunConfig& c) { return c.train.clip_norm ? fmt(*c.train.clip_norm) : std::string("none"); },
            [](RunConfig& c, const std::string& v) {
              if (v == "none") c.train.clip_norm.reset();
              else c.train.clip_norm = as_double("clip_norm", v);
            }},
      Field{"baseline", [](const RunConfig& c) { return baseline_name(c.train.baseline); },
            [](RunConfig& c, const std::string& v) { c.train.baseline = parse_baseline(v); }},
      Field{"mi_update", [](const RunConfig& c) { return mi_update_name(c.train.mi_update); },
            [](RunConfig& c, const std::string& v) { c.train.mi_update = parse_mi_update(v); }},
      KGA_SIZE("eval_every", train.eval_every),
      KGA_SIZE("patience", train.patience),

      KGA_SIZE("synth_entities", synth.entities),
      KGA_SIZE("synth_relations", synth.relations),
      KGA_SIZE("synth_triplets", synth.triplets),
      KGA_REAL("synth_overlap", synth.overlap),
      KGA_REAL("seed_fraction", synth.seed_fraction),
  };
  return table;
}

#undef KGA_SIZE
#undef KGA_REAL
#undef KGA_PATH

// Keys written by `synth` into its manifest for the record; accepted and ignored.
bool informational(const std::string& key) { return key == "shared_triplets"; }

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
  }();
  return keys;
}

KeyValues parse_config_text(const std::string& text, const std::string& origin) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  const auto& keys = config_keys();
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const auto where = origin + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (informational(key)) continue;
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
    out[key] = value;
  }
  return out;
}

KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

KeyValues env_overrides(char** environ_block) {
  KeyValues out;
  if (!environ_block) return out;
  for (const auto& key : config_keys()) {
    std::string name = "KGA_" + key;
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
    const std::string prefix = name + "=";
    for (char** e = environ_block; *e; ++e) {
      if (std::string_view(*e).starts_with(prefix)) out[key] = std::string(*e + prefix.size());
    }
  }
  return out;
}

KeyValues merge(std::initializer_list<const KeyValues*> layers) {
  KeyValues out;
  for (const auto* layer : layers) {
    for (const auto& [k, v] : *layer) out[k] = v;
  }
  return out;
}

RunConfig build_config(const KeyValues& values) {
  RunConfig config;
  for (const auto& f : fields()) {
    if (const auto it = values.find(f.key); it != values.end()) f.set(config, it->second);
  }
  if (config.threads == 0) throw ConfigError("threads must be at least 1");
  if (config.validation_fraction < 0.0 || config.validation_fraction >= 1.0) {
    throw ConfigError("validation_fraction must lie in [0, 1)");
  }
  if (config.top == 0) throw ConfigError("top must be positive");
  rethrow_as_config("embedding", [&] { config.embed.validate(); return 0; });
  rethrow_as_config("training", [&] { config.train.validate(); return 0; });
  return config;
}

std::string render_config(const RunConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(config) + "\n";
  return out;
}

std::uint64_t stage_seed(const RunConfig& config, const char* stage) {
  return SeedStreams(config.seed).seed_for(stage);
}

}  // namespace kga::cli
