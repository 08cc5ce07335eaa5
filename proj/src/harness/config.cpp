#include "spectralab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace spectralab {

using nlohmann::json;

namespace {

// Reads fields from one JSON object and rejects any key not consumed.
class Fields {
 public:
  Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string path(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + path_ + "." + it.key() + "'");
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

json to_json_value(const RunConfig& c) {
  const auto& a = c.architecture;
  return json{
      {"schema_version", c.schema_version},
      {"name", c.name},
      {"dataset",
       {{"kind", c.dataset.kind},
        {"modes", c.dataset.modes},
        {"samples", c.dataset.samples},
        {"radius", c.dataset.radius},
        {"sigma", c.dataset.sigma},
        {"images", c.dataset.images},
        {"labels", c.dataset.labels},
        {"downscale", c.dataset.downscale}}},
      {"architecture",
       {{"latent_dim", a.latent_dim},
        {"generator_hidden", a.generator_hidden},
        {"discriminator_hidden", a.discriminator_hidden},
        {"classifier_hidden", a.classifier_hidden},
        {"init_stddev", a.init_stddev}}},
      {"clamp",
       {{"enabled", c.clamp.enabled},
        {"epsilon", c.clamp.epsilon},
        {"lambda_min", c.clamp.lambda_min},
        {"lambda_max", c.clamp.lambda_max}}},
      {"clamp_norm_mode", to_string(c.clamp.norm_mode)},
      {"training",
       {{"steps", c.training.steps},
        {"batch_size", c.training.batch_size},
        {"learning_rate", c.training.adam.learning_rate},
        {"beta1", c.training.adam.beta1},
        {"beta2", c.training.adam.beta2},
        {"adam_epsilon", c.training.adam.epsilon},
        {"classifier_epochs", c.training.classifier_epochs}}},
      {"diagnostics",
       {{"every", c.diagnostics.every},
        {"probe_size", c.diagnostics.probe_size},
        {"score_samples", c.diagnostics.score_samples},
        {"mode_samples", c.diagnostics.mode_samples},
        {"real_samples", c.diagnostics.real_samples}}},
      {"seeds",
       {{"data", c.seeds.data},
        {"classifier", c.seeds.classifier},
        {"probe", c.seeds.probe},
        {"init", c.seeds.init},
        {"latent", c.seeds.latent},
        {"batches", c.seeds.batches},
        {"clamp", c.seeds.clamp}}},
      {"memorizer",
       {{"duplication_fraction", c.memorizer.duplication_fraction},
        {"pairs", c.memorizer.pairs},
        {"epochs", c.memorizer.epochs},
        {"batch_size", c.memorizer.batch_size},
        {"learning_rate", c.memorizer.learning_rate}}},
      {"vae",
       {{"epochs", c.vae.epochs}, {"batch_size", c.vae.batch_size}, {"learning_rate", c.vae.learning_rate}}},
      {"output_dir", c.output_dir},
  };
}

}  // namespace

void RunConfig::validate() const {
  if (schema_version != kConfigSchemaVersion)
    throw ConfigError("unsupported config schema_version " + std::to_string(schema_version));
  if (dataset.kind != "ring" && dataset.kind != "idx") throw ConfigError("dataset.kind must be 'ring' or 'idx'");
  if (dataset.kind == "idx" && (dataset.images.empty() || dataset.labels.empty()))
    throw ConfigError("idx dataset needs images and labels paths");
  if (architecture.latent_dim == 0) throw ConfigError("architecture.latent_dim must be positive");
  if (training.batch_size == 0) throw ConfigError("training.batch_size must be positive");
  if (diagnostics.probe_size == 0 || diagnostics.score_samples < 2 || diagnostics.mode_samples == 0 ||
      diagnostics.real_samples < 2)
    throw ConfigError("diagnostics sample sizes are too small");
  if (clamp.enabled) {
    try {
      clamp.validate();
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
}

std::string config_to_json(const RunConfig& cfg) { return to_json_value(cfg).dump(2) + "\n"; }

RunConfig config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Fields top(doc, "config");
  top.get("schema_version", c.schema_version);
  if (!doc.contains("schema_version")) throw ConfigError("config is missing schema_version");
  top.get("name", c.name);
  top.get("output_dir", c.output_dir);
  if (const json* d = top.child("dataset")) {
    Fields f(*d, "config.dataset");
    f.get("kind", c.dataset.kind);
    f.get("modes", c.dataset.modes);
    f.get("samples", c.dataset.samples);
    f.get("radius", c.dataset.radius);
    f.get("sigma", c.dataset.sigma);
    f.get("images", c.dataset.images);
    f.get("labels", c.dataset.labels);
    f.get("downscale", c.dataset.downscale);
    f.finish();
  }
  if (const json* d = top.child("architecture")) {
    Fields f(*d, "config.architecture");
    f.get("latent_dim", c.architecture.latent_dim);
    f.get("generator_hidden", c.architecture.generator_hidden);
    f.get("discriminator_hidden", c.architecture.discriminator_hidden);
    f.get("classifier_hidden", c.architecture.classifier_hidden);
    f.get("init_stddev", c.architecture.init_stddev);
    f.finish();
  }
  if (const json* d = top.child("clamp")) {
    Fields f(*d, "config.clamp");
    f.get("enabled", c.clamp.enabled);
    f.get("epsilon", c.clamp.epsilon);
    f.get("lambda_min", c.clamp.lambda_min);
    f.get("lambda_max", c.clamp.lambda_max);
    f.finish();
  }
  {
    std::string mode = to_string(c.clamp.norm_mode);
    top.get("clamp_norm_mode", mode);
    try {
      c.clamp.norm_mode = clamp_norm_mode_from_string(mode);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  if (const json* d = top.child("training")) {
    Fields f(*d, "config.training");
    f.get("steps", c.training.steps);
    f.get("batch_size", c.training.batch_size);
    f.get("learning_rate", c.training.adam.learning_rate);
    f.get("beta1", c.training.adam.beta1);
    f.get("beta2", c.training.adam.beta2);
    f.get("adam_epsilon", c.training.adam.epsilon);
    f.get("classifier_epochs", c.training.classifier_epochs);
    f.finish();
  }
  if (const json* d = top.child("diagnostics")) {
    Fields f(*d, "config.diagnostics");
    f.get("every", c.diagnostics.every);
    f.get("probe_size", c.diagnostics.probe_size);
    f.get("score_samples", c.diagnostics.score_samples);
    f.get("mode_samples", c.diagnostics.mode_samples);
    f.get("real_samples", c.diagnostics.real_samples);
    f.finish();
  }
  if (const json* d = top.child("seeds")) {
    Fields f(*d, "config.seeds");
    f.get("data", c.seeds.data);
    f.get("classifier", c.seeds.classifier);
    f.get("probe", c.seeds.probe);
    f.get("init", c.seeds.init);
    f.get("latent", c.seeds.latent);
    f.get("batches", c.seeds.batches);
    f.get("clamp", c.seeds.clamp);
    f.finish();
  }
  if (const json* d = top.child("memorizer")) {
    Fields f(*d, "config.memorizer");
    f.get("duplication_fraction", c.memorizer.duplication_fraction);
    f.get("pairs", c.memorizer.pairs);
    f.get("epochs", c.memorizer.epochs);
    f.get("batch_size", c.memorizer.batch_size);
    f.get("learning_rate", c.memorizer.learning_rate);
    f.finish();
  }
  if (const json* d = top.child("vae")) {
    Fields f(*d, "config.vae");
    f.get("epochs", c.vae.epochs);
    f.get("batch_size", c.vae.batch_size);
    f.get("learning_rate", c.vae.learning_rate);
    f.finish();
  }
  top.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void save_config(const RunConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write config " + path.string());
  out << config_to_json(cfg);
}

}  // namespace spectralab
