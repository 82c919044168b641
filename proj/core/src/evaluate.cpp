#include "evfusion/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "evfusion/error.hpp"

namespace evfusion {

using nlohmann::json;

namespace {

struct Accumulator {
  double dice = 0.0;
  double hd = 0.0;
  double hd95 = 0.0;
  std::size_t hd_cases = 0;
  std::size_t hd_excluded = 0;
};

struct MaskScore {
  double dice;
  std::optional<double> hd;
  std::optional<double> hd95;
};

MaskScore score_masks(const Mask& pred, const Mask& truth, const GridGeometry& grid) {
  MaskScore s{dice_score(pred, truth), std::nullopt, std::nullopt};
  const bool any_pred = std::find(pred.begin(), pred.end(), 1) != pred.end();
  const bool any_truth = std::find(truth.begin(), truth.end(), 1) != truth.end();
  if (any_pred && any_truth) {
    s.hd = hausdorff(pred, truth, grid, HausdorffMode::exact);
    s.hd95 = hausdorff(pred, truth, grid, HausdorffMode::percentile95);
  }
  return s;
}

void accumulate(Accumulator& acc, const MaskScore& s) {
  acc.dice += s.dice;
  if (s.hd) {
    acc.hd += *s.hd;
    acc.hd95 += *s.hd95;
    ++acc.hd_cases;
  } else {
    ++acc.hd_excluded;
  }
}

RegionScore finish(const std::string& name, const Accumulator& acc, std::size_t cases) {
  RegionScore r{name, acc.dice / static_cast<double>(cases), std::nullopt, std::nullopt, acc.hd_excluded};
  if (acc.hd_cases > 0) {
    r.hausdorff = acc.hd / static_cast<double>(acc.hd_cases);
    r.hd95 = acc.hd95 / static_cast<double>(acc.hd_cases);
  }
  return r;
}

Mask label_mask(std::span<const int> labels, int k) {
  Mask m(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) m[i] = labels[i] == k;
  return m;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fixed(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string fixed(const std::optional<double>& v) { return v ? fixed(*v) : "n/a"; }

// Left-aligned first column, right-aligned others.
std::string format_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string pad(width[c] - row[c].size(), ' ');
      if (c == 0) {
        out << row[c] << pad;
      } else {
        out << "  " << pad << row[c];
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

MetricsReport evaluate_predictions(const std::vector<CasePrediction>& cases,
                                   const std::vector<std::string>& class_names, const RegionScheme& regions) {
  if (cases.empty()) throw InvalidArgument("cannot evaluate an empty split");
  const std::size_t k_count = class_names.size();
  if (k_count < 2) throw InvalidArgument("evaluation needs at least two classes");

  MetricsReport report;
  report.case_count = cases.size();
  std::vector<Accumulator> per_class(k_count - 1);
  std::map<std::string, Accumulator> per_region;
  std::vector<double> confidence;
  std::vector<std::uint8_t> correct;

  for (const auto& c : cases) {
    const std::size_t n = c.truth.size();
    if (c.predicted.size() != n || c.scores.rows() != n || c.scores.cols() != k_count || c.grid.voxels() != n) {
      throw InvalidArgument("case " + c.id + ": prediction shapes do not match");
    }
    CaseScore cs{c.id, {}, {}, 0.0};
    for (std::size_t k = 1; k < k_count; ++k) {
      const auto s = score_masks(label_mask(c.predicted, static_cast<int>(k)), label_mask(c.truth, static_cast<int>(k)),
                                 c.grid);
      accumulate(per_class[k - 1], s);
      cs.dice.push_back(s.dice);
      cs.hausdorff.push_back(s.hd);
      cs.macro_dice += s.dice;
    }
    cs.macro_dice /= static_cast<double>(k_count - 1);
    report.cases.push_back(std::move(cs));

    if (!regions.empty()) {
      const auto pred_masks = remap_nested_regions(c.predicted, k_count, regions);
      const auto truth_masks = remap_nested_regions(c.truth, k_count, regions);
      for (const auto& [name, mask] : truth_masks) accumulate(per_region[name], score_masks(pred_masks.at(name), mask, c.grid));
    }

    for (std::size_t i = 0; i < n; ++i) {
      const auto p = c.predicted[i];
      if (p < 0 || static_cast<std::size_t>(p) >= k_count) throw InvalidArgument("predicted label out of range");
      confidence.push_back(c.scores(i, static_cast<std::size_t>(p)));
      correct.push_back(p == c.truth[i]);
    }
  }

  double macro = 0.0, macro_hd = 0.0;
  std::size_t hd_classes = 0;
  for (std::size_t k = 1; k < k_count; ++k) {
    report.classes.push_back(finish(class_names[k], per_class[k - 1], cases.size()));
    macro += report.classes.back().dice;
    if (report.classes.back().hausdorff) {
      macro_hd += *report.classes.back().hausdorff;
      ++hd_classes;
    }
  }
  report.macro_dice = macro / static_cast<double>(k_count - 1);
  if (hd_classes > 0) report.macro_hausdorff = macro_hd / static_cast<double>(hd_classes);
  for (const auto& [name, acc] : per_region) report.regions.push_back(finish(name, acc, cases.size()));
  report.voxels = confidence.size();
  report.ece = ece(confidence, correct, kEceBins);
  return report;
}

std::vector<CasePrediction> predict_split(const ModelParams& params, const std::vector<PreparedCase>& cases,
                                          std::size_t threads) {
  std::vector<CasePrediction> out;
  for (const auto& c : cases) {
    Matrix scores = predict_scores(params, c.features, threads);
    auto predicted = predicted_labels(scores);
    out.push_back({c.id, c.labels, std::move(predicted), std::move(scores), c.grid});
  }
  return out;
}

MetricsReport evaluate(const Checkpoint& checkpoint, const Dataset& dataset, const std::string& split,
                       std::size_t threads) {
  if (dataset.scene.class_names != checkpoint.params.frame.labels()) {
    throw ConfigError("checkpoint classes do not match the dataset");
  }
  if (dataset.scene.modalities() != checkpoint.params.modalities) {
    throw ConfigError("checkpoint modality count does not match the dataset");
  }
  const auto cases = prepare_split(dataset, split, checkpoint.config.window);
  if (cases.empty()) throw ConfigError("split '" + split + "' has no cases");
  auto report = evaluate_predictions(predict_split(checkpoint.params, cases, threads), dataset.scene.class_names,
                                     dataset.scene.regions);
  report.split = split;
  return report;
}

json report_to_json(const MetricsReport& r) {
  auto region_json = [](const RegionScore& s) {
    return json{{"name", s.name},
                {"dice", s.dice},
                {"hausdorff", optional_number(s.hausdorff)},
                {"hd95", optional_number(s.hd95)},
                {"hd_excluded", s.hd_excluded}};
  };
  json classes = json::array(), regions = json::array(), cases = json::array();
  for (const auto& s : r.classes) classes.push_back(region_json(s));
  for (const auto& s : r.regions) regions.push_back(region_json(s));
  for (const auto& c : r.cases) {
    json hd = json::array();
    for (const auto& v : c.hausdorff) hd.push_back(optional_number(v));
    cases.push_back({{"id", c.id}, {"dice", c.dice}, {"hausdorff", hd}, {"macro_dice", c.macro_dice}});
  }
  return {{"split", r.split},     {"cases", r.case_count},    {"voxels", r.voxels},
          {"macro_dice", r.macro_dice}, {"macro_hausdorff", optional_number(r.macro_hausdorff)},
          {"ece", r.ece},         {"classes", classes},       {"regions", regions},
          {"per_case", cases}};
}

std::string report_to_table(const MetricsReport& r) {
  std::vector<std::vector<std::string>> rows{{"class", "dice", "hausdorff", "hd95", "hd_excluded"}};
  auto add = [&](const RegionScore& s) {
    rows.push_back({s.name, fixed(s.dice), fixed(s.hausdorff), fixed(s.hd95), std::to_string(s.hd_excluded)});
  };
  for (const auto& s : r.classes) add(s);
  for (const auto& s : r.regions) add(s);
  std::string out = "split " + r.split + ", " + std::to_string(r.case_count) + " cases, " +
                    std::to_string(r.voxels) + " voxels\n";
  out += format_table(rows);
  out += "macro dice " + fixed(r.macro_dice) + "  macro hausdorff " + fixed(r.macro_hausdorff) + "  ece " + fixed(r.ece) + "\n";
  return out;
}

json reliability_to_json(const Checkpoint& ck) {
  const auto& p = ck.params;
  if (!p.reliability) throw ConfigError("checkpoint has no reliability matrix");
  json beta = json::array();
  for (std::size_t h = 0; h < p.modalities; ++h) beta.push_back(p.reliability->beta_row(h));
  return {{"classes", p.frame.labels()}, {"modalities", ck.modality_names}, {"active", p.active}, {"beta", beta}};
}

std::string reliability_to_table(const Checkpoint& ck) {
  const auto& p = ck.params;
  if (!p.reliability) throw ConfigError("checkpoint has no reliability matrix");
  std::vector<std::vector<std::string>> rows{{"modality"}};
  for (const auto& label : p.frame.labels()) rows.front().push_back(label);
  for (std::size_t h = 0; h < p.modalities; ++h) {
    rows.push_back({h < ck.modality_names.size() ? ck.modality_names[h] : "source" + std::to_string(h)});
    for (double b : p.reliability->beta_row(h)) rows.back().push_back(fixed(b));
  }
  return format_table(rows);
}

}  // namespace evfusion
