#include "evfusion/checkpoint.hpp"

#include <optional>

#include "evfusion/container.hpp"
#include "evfusion/error.hpp"

namespace evfusion {

namespace {

constexpr std::string_view kCheckpointMagic = "EVFCKPT";
constexpr std::uint32_t kCheckpointVersion = 1;

std::size_t checkpoint_payload_bytes(const nlohmann::json& meta) {
  if (meta.at("dtype").get<std::string>() != "float64") throw InvalidArgument("unsupported dtype");
  std::size_t total = 0;
  for (const auto& b : meta.at("blocks")) total += b.at("size").get<std::size_t>();
  return total * sizeof(double);
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const auto& p = ck.params;
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : p.blocks()) blocks.push_back({{"name", b.name}, {"size", b.values.size()}});
  nlohmann::json history = nlohmann::json::array();
  for (const auto& r : ck.history) {
    history.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_dice", r.val_dice}});
  }
  nlohmann::json meta = {{"kind", p.is_evidential() ? "evidential" : "softmax"},
                         {"classes", p.frame.labels()},
                         {"modality_names", ck.modality_names},
                         {"modalities", p.modalities},
                         {"feature_dim", p.feature_dim},
                         {"active", p.active},
                         {"blocks", blocks},
                         {"config", train_config_to_json(ck.config)},
                         {"epoch", ck.epoch},
                         {"history", history},
                         {"dtype", "float64"}};
  if (p.is_evidential()) {
    nlohmann::json counts = nlohmann::json::array();
    for (const auto& s : p.sources) counts.push_back(s.prototype_count());
    meta["prototypes"] = counts;
  }
  const auto flat = p.flatten();
  write_container(path, kCheckpointMagic, kCheckpointVersion, meta, to_le_bytes(std::span<const double>(flat)));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const Container c = read_container(path, kCheckpointMagic, &checkpoint_payload_bytes);
  const std::string where = "'" + path.string() + "': ";
  if (c.version != kCheckpointVersion) {
    throw FormatError(where + "unsupported checkpoint version " + std::to_string(c.version));
  }
  try {
    const auto& m = c.meta;
    const dst::Frame frame(m.at("classes").get<std::vector<std::string>>());
    const auto modalities = m.at("modalities").get<std::size_t>();
    const auto dim = m.at("feature_dim").get<std::size_t>();
    auto active = m.at("active").get<std::vector<std::size_t>>();
    for (std::size_t h : active) {
      if (h >= modalities) throw FormatError(where + "active source out of range");
    }
    const auto kind = m.at("kind").get<std::string>();
    std::optional<ModelParams> params;
    if (kind == "evidential") {
      const auto counts = m.at("prototypes").get<std::vector<std::size_t>>();
      if (counts.size() != modalities) throw FormatError(where + "prototype counts do not match modalities");
      std::vector<ESParams> sources;
      for (std::size_t count : counts) sources.emplace_back(frame, count, dim);
      params = ModelParams::evidential(frame, std::move(sources));
      params->active = std::move(active);
    } else if (kind == "softmax") {
      params = ModelParams::softmax(frame, modalities, dim, std::move(active));
    } else {
      throw FormatError(where + "unknown model kind '" + kind + "'");
    }
    const auto expected = params->blocks();
    const auto& stored = m.at("blocks");
    if (stored.size() != expected.size()) throw FormatError(where + "parameter block list does not match shapes");
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (stored[i].at("name").get<std::string>() != expected[i].name ||
          stored[i].at("size").get<std::size_t>() != expected[i].values.size()) {
        throw FormatError(where + "parameter block " + expected[i].name + " does not match shapes");
      }
    }
    params->assign(doubles_from_le(c.payload));

    Checkpoint ck{train_config_from_json(m.at("config")), m.at("modality_names").get<std::vector<std::string>>(),
                  std::move(*params), m.at("epoch").get<std::size_t>(), {}};
    for (const auto& r : m.at("history")) {
      ck.history.push_back(
          {r.at("epoch").get<std::size_t>(), r.at("train_loss").get<double>(), r.at("val_dice").get<double>()});
    }
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + "malformed checkpoint metadata: " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(where + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(where + e.what());
  }
}

}  // namespace evfusion
