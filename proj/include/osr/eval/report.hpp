#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "osr/eval/rejection.hpp"
#include "osr/eval/scoring.hpp"

namespace osr::eval {

struct DatasetRejection {
  std::string dataset_id;
  double entropy_percent = 0.0;
  double latent_percent = 0.0;
};

struct RejectionReport {
  std::string trained_dataset;
  std::string model_variant;
  double test_accuracy = 0.0;  // percent, deterministic forward pass
  double entropy_threshold = 0.0;
  double latent_threshold = 0.0;
  DatasetRejection inlier;  // trained dataset's validation split
  std::vector<DatasetRejection> ood;

  double inlier_retention(Method m) const {
    return 100.0 - (m == Method::entropy ? inlier.entropy_percent : inlier.latent_percent);
  }
};

struct ReportRun {
  RejectionReport report;
  std::vector<ScoreSet> scores;  // validation first, then OOD sets in order; entropy before latent
};

inline double test_accuracy(const models::VariationalModel& m, const dataio::Dataset& test) {
  require(test.has_labels() && test.size() > 0, "test accuracy needs a labelled, non-empty dataset");
  const auto predicted = models::predict_labels(m, test.inputs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == test.labels[i] ? 1 : 0;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(predicted.size());
}

/// Calibrates one threshold per method on the validation split, then applies
/// it to every OOD dataset. Dataset k is scored with stream rng.fork(k).
inline ReportRun build_report(const models::VariationalModel& m, std::span<const evt::ClassWeibull> evt_models,
                              const dataio::Dataset& validation, const dataio::Dataset& test,
                              std::span<const dataio::Dataset> ood, double inlier_fraction,
                              const ScoringConfig& cfg, const Rng& rng) {
  ReportRun run;
  auto& report = run.report;
  report.trained_dataset = validation.id;
  report.model_variant = models::to_string(m.variant());
  report.test_accuracy = test_accuracy(m, test);

  auto [val_entropy, val_latent] = score_dataset(m, evt_models, validation, cfg, rng.fork(0));
  report.entropy_threshold = calibrate_threshold(val_entropy.scores, inlier_fraction);
  report.latent_threshold = calibrate_threshold(val_latent.scores, inlier_fraction);
  report.inlier = {validation.id, rejection_rate(val_entropy, report.entropy_threshold),
                   rejection_rate(val_latent, report.latent_threshold)};
  run.scores.push_back(std::move(val_entropy));
  run.scores.push_back(std::move(val_latent));

  for (std::size_t k = 0; k < ood.size(); ++k) {
    auto [ent, lat] = score_dataset(m, evt_models, ood[k], cfg, rng.fork(k + 1));
    report.ood.push_back({ood[k].id, rejection_rate(ent, report.entropy_threshold),
                          rejection_rate(lat, report.latent_threshold)});
    run.scores.push_back(std::move(ent));
    run.scores.push_back(std::move(lat));
  }
  return run;
}

namespace detail {
inline std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string sig6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}
}  // namespace detail

/// Table-style CSV: one row per report; the trained dataset's own columns
/// (validation rejection) come first, then each OOD dataset.
inline std::string report_csv(std::span<const RejectionReport> reports) {
  require(!reports.empty(), "report_csv: no reports");
  std::ostringstream out;
  const auto& first = reports.front();
  out << "trained,model_variant,test_accuracy";
  out << ',' << first.inlier.dataset_id << "_entropy," << first.inlier.dataset_id << "_latent";
  for (const auto& d : first.ood) out << ',' << d.dataset_id << "_entropy," << d.dataset_id << "_latent";
  out << '\n';
  for (const auto& r : reports) {
    out << r.trained_dataset << ',' << r.model_variant << ',' << detail::fixed2(r.test_accuracy);
    out << ',' << detail::fixed2(r.inlier.entropy_percent) << ',' << detail::fixed2(r.inlier.latent_percent);
    for (const auto& d : r.ood) out << ',' << detail::fixed2(d.entropy_percent) << ',' << detail::fixed2(d.latent_percent);
    out << '\n';
  }
  return out.str();
}

inline void write_report_csv(const std::filesystem::path& path, std::span<const RejectionReport> reports) {
  auto out = detail::open_output(path);
  out << report_csv(reports);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline std::string curves_csv(std::span<const Curve> curves) {
  std::ostringstream out;
  out << "method,dataset,threshold,rejection_percent\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      out << to_string(c.method) << ',' << c.dataset_id << ',' << detail::sig6(p.threshold) << ','
          << detail::sig6(p.percent) << '\n';
    }
  }
  return out.str();
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const char* palette(std::size_t i) {
  static constexpr const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors[i % 10];
}

}  // namespace detail

/// Standalone SVG: entropy curves in the left panel, EVT curves in the
/// right, one polyline per curve, shared legend keyed by dataset.
inline std::string curves_svg(std::span<const Curve> curves) {
  constexpr double kPanelW = 400, kPanelH = 300, kLeft = 70, kTop = 40, kGap = 110;
  std::vector<std::string> datasets;
  for (const auto& c : curves) {
    if (std::find(datasets.begin(), datasets.end(), c.dataset_id) == datasets.end()) datasets.push_back(c.dataset_id);
  }
  const double width = kLeft + 2 * kPanelW + kGap + 40;
  const double legend_top = kTop + kPanelH + 60;
  const double height = legend_top + 20.0 * static_cast<double>(datasets.size()) + 20;

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

  for (int panel = 0; panel < 2; ++panel) {
    const Method method = panel == 0 ? Method::entropy : Method::evt_latent;
    const double x0 = kLeft + panel * (kPanelW + kGap);
    double x_max = 0.0;
    for (const auto& c : curves) {
      if (c.method != method) continue;
      for (const auto& p : c.points) x_max = std::max(x_max, p.threshold);
    }
    if (x_max <= 0.0) x_max = 1.0;
    const char* title = panel == 0 ? "Prediction entropy" : "Latent EVT outlier probability";
    const char* xlabel = panel == 0 ? "entropy threshold (nats)" : "rejection prior Omega_t";
    out << "<g class=\"panel\" id=\"" << to_string(method) << "\">\n";
    out << "<text x=\"" << x0 + kPanelW / 2 << "\" y=\"" << kTop - 15 << "\" text-anchor=\"middle\" font-size=\"14\">"
        << title << "</text>\n";
    out << "<line x1=\"" << x0 << "\" y1=\"" << kTop + kPanelH << "\" x2=\"" << x0 + kPanelW << "\" y2=\""
        << kTop + kPanelH << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << x0 << "\" y1=\"" << kTop << "\" x2=\"" << x0 << "\" y2=\"" << kTop + kPanelH
        << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double frac = t / 4.0;
      const double tx = x0 + frac * kPanelW;
      const double ty = kTop + kPanelH - frac * kPanelH;
      out << "<text x=\"" << tx << "\" y=\"" << kTop + kPanelH + 15 << "\" text-anchor=\"middle\" font-size=\"10\">"
          << detail::sig6(frac * x_max) << "</text>\n";
      out << "<text x=\"" << x0 - 6 << "\" y=\"" << ty + 3 << "\" text-anchor=\"end\" font-size=\"10\">"
          << static_cast<int>(frac * 100) << "</text>\n";
    }
    out << "<text x=\"" << x0 + kPanelW / 2 << "\" y=\"" << kTop + kPanelH + 35
        << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel << "</text>\n";
    out << "<text x=\"" << x0 - 40 << "\" y=\"" << kTop + kPanelH / 2 << "\" text-anchor=\"middle\" font-size=\"12\" "
        << "transform=\"rotate(-90 " << x0 - 40 << ' ' << kTop + kPanelH / 2 << ")\">rejected (%)</text>\n";
    for (const auto& c : curves) {
      if (c.method != method) continue;
      const auto color_index = static_cast<std::size_t>(
          std::find(datasets.begin(), datasets.end(), c.dataset_id) - datasets.begin());
      out << "<polyline fill=\"none\" stroke=\"" << detail::palette(color_index) << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < c.points.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", x0 + c.points[i].threshold / x_max * kPanelW,
                      kTop + kPanelH - c.points[i].percent / 100.0 * kPanelH);
        out << buf;
      }
      out << "\"/>\n";
    }
    out << "</g>\n";
  }
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    const double y = legend_top + 20.0 * static_cast<double>(i);
    out << "<line x1=\"" << kLeft << "\" y1=\"" << y << "\" x2=\"" << kLeft + 30 << "\" y2=\"" << y
        << "\" stroke=\"" << detail::palette(i) << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kLeft + 38 << "\" y=\"" << y + 4 << "\" font-size=\"12\">"
        << detail::xml_escape(datasets[i]) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

/// Writes `<stem>.csv` and `<stem>.svg`.
inline void export_curves(std::span<const Curve> curves, const std::filesystem::path& stem) {
  require(!curves.empty(), "export_curves: no curves");
  auto csv_path = stem;
  csv_path += ".csv";
  auto svg_path = stem;
  svg_path += ".svg";
  {
    auto out = detail::open_output(csv_path);
    out << curves_csv(curves);
    if (!out) throw IoError("write failed for '" + csv_path.string() + "'");
  }
  auto out = detail::open_output(svg_path);
  out << curves_svg(curves);
  if (!out) throw IoError("write failed for '" + svg_path.string() + "'");
}

}  // namespace osr::eval
