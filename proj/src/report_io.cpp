#include "metafuse/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "metafuse/error.hpp"

namespace metafuse {

using nlohmann::json;

namespace {

void put_provenance(std::ostringstream& out, const std::vector<std::string>& provenance) {
  for (const auto& line : provenance) out << "# " << line << '\n';
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json metric_values_json(const MetricValues& mv) {
  json j = json::object();
  for (std::size_t i = 0; i < kMetricCount; ++i) j[std::string(kMetricNames[i])] = number_or_null(mv.v[i]);
  return j;
}

MetricValues metric_values_from(const json& j) {
  MetricValues mv;
  for (std::size_t i = 0; i < kMetricCount; ++i) mv.v[i] = number_from(j.at(std::string(kMetricNames[i])));
  return mv;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (v == 0.0) return "0";  // folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string metrics_table(const EvaluationReport& rep, const std::vector<std::string>& provenance) {
  std::ostringstream out;
  put_provenance(out, provenance);
  out << "# run=" << rep.name << " split=" << rep.split_fingerprint << '\n';
  out << "class\ttp\tfp\ttn\tfn";
  for (auto name : kMetricNames) out << '\t' << name;
  out << "\tauroc\tdegenerate\n";
  for (std::size_t c = 0; c < rep.per_class.size(); ++c) {
    const auto& m = rep.per_class[c];
    out << rep.class_names[c] << '\t' << m.tp << '\t' << m.fp << '\t' << m.tn << '\t' << m.fn;
    for (double v : m.values.v) out << '\t' << format_number(v);
    out << '\t' << format_number(rep.auroc[c]) << '\t' << (m.degenerate ? 1 : 0) << '\n';
  }
  out << "macro\t\t\t\t";
  for (double v : rep.macro.v) out << '\t' << format_number(v);
  out << '\t' << format_number(rep.macro_auroc) << "\t\n";
  return out.str();
}

std::string roc_table(const EvaluationReport& rep, const std::vector<std::string>& provenance) {
  std::ostringstream out;
  put_provenance(out, provenance);
  out << "class\tthreshold\tfpr\ttpr\n";
  for (std::size_t c = 0; c < rep.roc.size(); ++c) {
    const auto& curve = rep.roc[c];
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
      out << rep.class_names[c] << '\t' << (std::isinf(curve.thresholds[i]) ? "inf" : format_number(curve.thresholds[i]))
          << '\t' << format_number(curve.points[i].fpr) << '\t' << format_number(curve.points[i].tpr) << '\n';
    }
  }
  return out.str();
}

std::string bar_table(const std::vector<DeltaEntry>& deltas, const std::vector<std::string>& provenance) {
  std::ostringstream out;
  put_provenance(out, provenance);
  out << "network\tcondition\tmetric\tdelta\n";
  for (const auto& d : deltas) {
    for (std::size_t i = 0; i < kMetricCount; ++i) {
      out << d.extractor << '\t' << to_string(d.condition) << '\t' << kMetricNames[i] << '\t'
          << format_number(d.delta.macro_delta.v[i]) << '\n';
    }
    out << d.extractor << '\t' << to_string(d.condition) << "\tauroc\t" << format_number(d.delta.macro_auroc_delta)
        << '\n';
  }
  return out.str();
}

std::string boxplot_table(const std::vector<DeltaEntry>& deltas, const std::vector<std::string>& provenance) {
  std::ostringstream out;
  put_provenance(out, provenance);
  out << "network\tcondition\tclass\tauroc_delta\n";
  for (const auto& d : deltas) {
    for (std::size_t c = 0; c < d.delta.auroc_delta.size(); ++c) {
      out << d.extractor << '\t' << to_string(d.condition) << '\t' << d.delta.class_names[c] << '\t'
          << format_number(d.delta.auroc_delta[c]) << '\n';
    }
  }
  return out.str();
}

std::string boxplot_summary_table(const std::vector<DeltaEntry>& deltas, const std::vector<std::string>& provenance) {
  std::ostringstream out;
  put_provenance(out, provenance);
  out << "network\tcondition\tn\tmin\tq1\tmedian\tq3\tmax\n";
  for (const auto& d : deltas) {
    const auto& b = d.delta.auroc_box;
    out << d.extractor << '\t' << to_string(d.condition) << '\t' << b.count << '\t' << format_number(b.min) << '\t'
        << format_number(b.q1) << '\t' << format_number(b.median) << '\t' << format_number(b.q3) << '\t'
        << format_number(b.max) << '\n';
  }
  return out.str();
}

std::string report_to_json(const EvaluationReport& rep) {
  json j;
  j["name"] = rep.name;
  j["class_names"] = rep.class_names;
  j["split_fingerprint"] = rep.split_fingerprint;
  json cm = json::array();
  for (std::size_t r = 0; r < rep.confusion.classes(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < rep.confusion.classes(); ++c) row.push_back(rep.confusion.at(r, c));
    cm.push_back(std::move(row));
  }
  j["confusion"] = std::move(cm);
  json per_class = json::array();
  for (const auto& m : rep.per_class) {
    json e = metric_values_json(m.values);
    e["tp"] = m.tp;
    e["fp"] = m.fp;
    e["tn"] = m.tn;
    e["fn"] = m.fn;
    e["degenerate"] = m.degenerate;
    per_class.push_back(std::move(e));
  }
  j["per_class"] = std::move(per_class);
  j["macro"] = metric_values_json(rep.macro);
  json auroc = json::array();
  for (double a : rep.auroc) auroc.push_back(number_or_null(a));
  j["auroc"] = std::move(auroc);
  j["macro_auroc"] = number_or_null(rep.macro_auroc);
  json roc = json::array();
  for (const auto& curve : rep.roc) {
    json pts = json::array();
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
      pts.push_back({number_or_null(curve.thresholds[i]), curve.points[i].fpr, curve.points[i].tpr});
    }
    roc.push_back({{"auroc", number_or_null(curve.auroc)}, {"points", std::move(pts)}});
  }
  j["roc"] = std::move(roc);
  return j.dump(1, '\t') + "\n";
}

EvaluationReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("evaluation report is not valid JSON: ") + e.what());
  }
  try {
    EvaluationReport rep;
    rep.name = j.at("name").get<std::string>();
    rep.class_names = j.at("class_names").get<std::vector<std::string>>();
    rep.split_fingerprint = j.at("split_fingerprint").get<std::string>();
    const std::size_t k = rep.class_names.size();
    rep.confusion = ConfusionMatrix(k);
    const auto& cm = j.at("confusion");
    if (cm.size() != k) throw FormatError("confusion matrix size does not match class count");
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < k; ++c) rep.confusion.at(r, c) = cm.at(r).at(c).get<std::uint64_t>();
    }
    for (const auto& e : j.at("per_class")) {
      ClassMetrics m;
      m.values = metric_values_from(e);
      m.tp = e.at("tp").get<std::uint64_t>();
      m.fp = e.at("fp").get<std::uint64_t>();
      m.tn = e.at("tn").get<std::uint64_t>();
      m.fn = e.at("fn").get<std::uint64_t>();
      m.degenerate = e.at("degenerate").get<bool>();
      rep.per_class.push_back(m);
    }
    rep.macro = metric_values_from(j.at("macro"));
    for (const auto& a : j.at("auroc")) rep.auroc.push_back(number_from(a));
    rep.macro_auroc = number_from(j.at("macro_auroc"));
    for (const auto& c : j.at("roc")) {
      RocCurve curve;
      curve.auroc = number_from(c.at("auroc"));
      for (const auto& p : c.at("points")) {
        const double t = p.at(0).is_null() ? std::numeric_limits<double>::infinity() : p.at(0).get<double>();
        curve.thresholds.push_back(t);
        curve.points.push_back({p.at(1).get<double>(), p.at(2).get<double>()});
      }
      rep.roc.push_back(std::move(curve));
    }
    if (rep.per_class.size() != k || rep.auroc.size() != k) {
      throw FormatError("evaluation report has inconsistent class counts");
    }
    return rep;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed evaluation report: ") + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace metafuse
