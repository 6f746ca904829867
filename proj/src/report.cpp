#include "skewtensor/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <initializer_list>
#include <sstream>

namespace skewtensor {

namespace {

Json tensor_level(const Tensor& t, int level, long long& cursor) {
  if (level == t.order()) return t[cursor++];
  Json arr = Json::array();
  for (int i = 0; i < t.dim(level); ++i)
    arr.push_back(tensor_level(t, level + 1, cursor));
  return arr;
}

void json_dims(const Json& j, std::vector<int>& dims) {
  if (j.is_array()) {
    if (j.empty()) throw value_error("tensor json has an empty level");
    if (dims.size() >= 8) throw value_error("tensor json is deeper than order 8");
    dims.push_back(static_cast<int>(j.size()));
    json_dims(j[0], dims);
  } else if (!j.is_number()) {
    throw value_error("tensor json must hold numbers");
  }
}

void json_fill(const Json& j, const std::vector<int>& dims, size_t level,
               Tensor& t, long long& cursor) {
  if (level == dims.size()) {
    if (!j.is_number()) throw value_error("tensor json must hold numbers");
    t[cursor++] = j.get<double>();
    return;
  }
  if (!j.is_array() ||
      static_cast<int>(j.size()) != dims[level])
    throw value_error("tensor json is ragged");
  for (const Json& c : j) json_fill(c, dims, level + 1, t, cursor);
}

void require_keys(const Json& j, const char* what,
                  const std::vector<std::string>& allowed) {
  if (!j.is_object())
    throw value_error(std::string(what) + " must be a json object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw value_error(std::string("unknown key in ") + what + ": " + it.key());
}

}  // namespace

Json tensor_to_json(const Tensor& t) {
  long long cursor = 0;
  return tensor_level(t, 0, cursor);
}

Tensor tensor_from_json(const Json& j) {
  std::vector<int> dims;
  json_dims(j, dims);
  if (dims.empty()) throw value_error("tensor json must be a nested array");
  Tensor t(dims);
  long long cursor = 0;
  json_fill(j, dims, 0, t, cursor);
  return t;
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (long long r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (long long c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty())
    throw value_error("matrix json must be an array of rows");
  const size_t rows = j.size(), cols = j[0].size();
  Matrix m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw value_error("matrix json is ragged");
    for (size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw value_error("matrix json must hold numbers");
      m(static_cast<long long>(r), static_cast<long long>(c)) =
          j[r][c].get<double>();
    }
  }
  return m;
}

Json params_to_json(const FamilyParams& p) {
  Json j;
  j["family"] = family_name(p.family);
  j["location"] = tensor_to_json(p.location);
  j["skewness"] = tensor_to_json(p.skewness);
  Json scales = Json::array();
  for (const SpdMatrix& s : p.scales) scales.push_back(matrix_to_json(s.matrix()));
  j["scales"] = std::move(scales);
  switch (p.family) {
    case Family::SkewT:
      j["dof"] = p.dof;
      break;
    case Family::GenHyperbolic:
      j["gh_index"] = p.gh_index;
      j["gh_concentration"] = p.gh_concentration;
      break;
    case Family::VarianceGamma:
      j["vg_shape"] = p.vg_shape;
      break;
    case Family::Nig:
      j["nig_concentration"] = p.nig_concentration;
      break;
    case Family::Normal:
    case Family::Sal:
      break;
  }
  return j;
}

FamilyParams params_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("family"))
    throw value_error("params json needs a family");
  const Family fam = family_from_name(j.at("family").get<std::string>());
  std::vector<std::string> allowed = {"family", "location", "skewness", "scales"};
  switch (fam) {
    case Family::SkewT:
      allowed.push_back("dof");
      break;
    case Family::GenHyperbolic:
      allowed.push_back("gh_index");
      allowed.push_back("gh_concentration");
      break;
    case Family::VarianceGamma:
      allowed.push_back("vg_shape");
      break;
    case Family::Nig:
      allowed.push_back("nig_concentration");
      break;
    case Family::Normal:
    case Family::Sal:
      break;
  }
  require_keys(j, "params", allowed);
  if (!j.contains("location")) throw value_error("params json needs a location");
  if (!j.contains("scales")) throw value_error("params json needs scales");
  FamilyParams p;
  p.family = fam;
  p.location = tensor_from_json(j.at("location"));
  if (j.contains("skewness")) {
    p.skewness = tensor_from_json(j.at("skewness"));
    if (fam == Family::Normal &&
        p.skewness.data().cwiseAbs().maxCoeff() != 0.0)
      throw value_error("normal params cannot carry a nonzero skewness");
  } else {
    p.skewness = Tensor(p.location.dims(), 0.0);
  }
  const Json& sc = j.at("scales");
  if (!sc.is_array() || sc.empty())
    throw value_error("params scales must be a non-empty array");
  for (const Json& s : sc) p.scales.emplace_back(matrix_from_json(s));
  if (j.contains("dof")) p.dof = j.at("dof").get<double>();
  if (j.contains("gh_index")) p.gh_index = j.at("gh_index").get<double>();
  if (j.contains("gh_concentration"))
    p.gh_concentration = j.at("gh_concentration").get<double>();
  if (j.contains("vg_shape")) p.vg_shape = j.at("vg_shape").get<double>();
  if (j.contains("nig_concentration"))
    p.nig_concentration = j.at("nig_concentration").get<double>();
  p.canonicalize();
  p.validate();
  return p;
}

Json fit_report_to_json(const FitResult& r) {
  Json j;
  j["params"] = params_to_json(r.params);
  j["loglik"] = r.loglik;
  j["bic"] = r.bic;
  j["n_free_params"] = r.n_free_params;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["loglik_trace"] = r.loglik_trace;
  j["regularized_iterations"] = r.regularized_iterations;
  j["warnings"] = r.warnings;
  return j;
}

FitConfig fit_config_from_json(const Json& j) {
  require_keys(j, "fit config",
               {"max_iter", "aitken_tol", "reg_epsilon", "scale_update",
                "init_params"});
  FitConfig c;
  if (j.contains("max_iter")) c.max_iter = j.at("max_iter").get<int>();
  if (j.contains("aitken_tol")) c.aitken_tol = j.at("aitken_tol").get<double>();
  if (j.contains("reg_epsilon")) c.reg_epsilon = j.at("reg_epsilon").get<double>();
  if (j.contains("scale_update"))
    c.scale_update = scale_update_from_name(j.at("scale_update").get<std::string>());
  if (j.contains("init_params")) {
    c.init = InitScheme::Provided;
    c.init_params = params_from_json(j.at("init_params"));
  }
  return c;
}

StudySpec study_spec_from_json(const Json& j) {
  require_keys(j, "study spec",
               {"cells", "replications", "truth_family", "fit_families",
                "skew_sigma", "snr", "max_cond", "seed", "scale_update",
                "max_iter", "aitken_tol", "reg_epsilon"});
  if (!j.contains("cells")) throw value_error("study spec needs cells");
  StudySpec s;
  s.cells.clear();
  for (const Json& c : j.at("cells")) {
    require_keys(c, "study cell", {"dims", "n_obs"});
    if (!c.contains("dims") || !c.contains("n_obs"))
      throw value_error("study cell needs dims and n_obs");
    StudyCell cell;
    for (const Json& d : c.at("dims")) cell.dims.push_back(d.get<int>());
    cell.n_obs = c.at("n_obs").get<int>();
    s.cells.push_back(std::move(cell));
  }
  if (j.contains("replications")) s.replications = j.at("replications").get<int>();
  if (j.contains("truth_family"))
    s.truth_family = family_from_name(j.at("truth_family").get<std::string>());
  if (j.contains("fit_families")) {
    s.fit_families.clear();
    for (const Json& f : j.at("fit_families"))
      s.fit_families.push_back(family_from_name(f.get<std::string>()));
  }
  if (j.contains("skew_sigma")) s.skew_sigma = j.at("skew_sigma").get<double>();
  if (j.contains("snr")) s.snr = j.at("snr").get<double>();
  if (j.contains("max_cond")) s.max_cond = j.at("max_cond").get<double>();
  if (j.contains("seed")) s.seed = j.at("seed").get<uint64_t>();
  if (j.contains("scale_update"))
    s.scale_update = scale_update_from_name(j.at("scale_update").get<std::string>());
  if (j.contains("max_iter")) s.max_iter = j.at("max_iter").get<int>();
  if (j.contains("aitken_tol")) s.aitken_tol = j.at("aitken_tol").get<double>();
  if (j.contains("reg_epsilon")) s.reg_epsilon = j.at("reg_epsilon").get<double>();
  return s;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::string dims_string(const std::vector<int>& dims) {
  std::string out;
  for (size_t i = 0; i < dims.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(dims[i]);
  }
  return out;
}

std::vector<int> dims_from_string(const std::string& s) {
  std::vector<int> dims;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    if (part.empty()) throw value_error("bad dims string: " + s);
    dims.push_back(std::atoi(part.c_str()));
    if (dims.back() < 1) throw value_error("bad dims string: " + s);
  }
  if (dims.empty()) throw value_error("bad dims string: " + s);
  return dims;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

const char* const kCsvHeader =
    "cell,dims,n_obs,rep,truth_family,fit_family,converged,iterations,loglik,"
    "bic,rel_err_mean,rel_err_kron,status,wall_time_sec";

// Splits one CSV document into records of fields, honoring quoted fields.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      any = true;
    } else if (c == ',') {
      rec.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      if (any || !field.empty()) {
        rec.push_back(std::move(field));
        field.clear();
        records.push_back(std::move(rec));
        rec.clear();
        any = false;
      }
    } else if (c != '\r') {
      field += c;
      any = true;
    }
  }
  if (any || !field.empty()) {
    rec.push_back(std::move(field));
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

std::string study_csv(const StudyResult& r) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const StudyRow& row : r.rows) {
    out += std::to_string(row.cell);
    out += ',';
    out += dims_string(row.dims);
    out += ',';
    out += std::to_string(row.n_obs);
    out += ',';
    out += std::to_string(row.rep);
    out += ',';
    out += family_name(row.truth_family);
    out += ',';
    out += family_name(row.fit_family);
    out += ',';
    out += row.converged ? "1" : "0";
    out += ',';
    out += std::to_string(row.iterations);
    out += ',';
    out += format_double(row.loglik);
    out += ',';
    out += format_double(row.bic);
    out += ',';
    out += format_double(row.rel_err_mean);
    out += ',';
    out += format_double(row.rel_err_kron);
    out += ',';
    out += csv_field(row.status);
    out += ',';
    out += format_double(row.wall_time_sec);
    out += '\n';
  }
  return out;
}

std::vector<StudyRow> study_rows_from_csv(const std::string& csv) {
  const auto records = parse_csv(csv);
  if (records.empty()) throw value_error("study csv is empty");
  {
    std::string joined;
    for (size_t i = 0; i < records[0].size(); ++i) {
      if (i) joined += ',';
      joined += records[0][i];
    }
    if (joined != kCsvHeader) throw value_error("study csv header mismatch");
  }
  std::vector<StudyRow> rows;
  for (size_t r = 1; r < records.size(); ++r) {
    const auto& f = records[r];
    if (f.size() != 14)
      throw value_error("study csv row " + std::to_string(r) +
                        " has the wrong field count");
    StudyRow row;
    row.cell = std::atoi(f[0].c_str());
    row.dims = dims_from_string(f[1]);
    row.n_obs = std::atoi(f[2].c_str());
    row.rep = std::atoi(f[3].c_str());
    row.truth_family = family_from_name(f[4]);
    row.fit_family = family_from_name(f[5]);
    row.converged = f[6] == "1";
    row.iterations = std::atoi(f[7].c_str());
    row.loglik = std::strtod(f[8].c_str(), nullptr);
    row.bic = std::strtod(f[9].c_str(), nullptr);
    row.rel_err_mean = std::strtod(f[10].c_str(), nullptr);
    row.rel_err_kron = std::strtod(f[11].c_str(), nullptr);
    row.status = f[12];
    row.wall_time_sec = std::strtod(f[13].c_str(), nullptr);
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double rank = q * static_cast<double>(v.size() - 1);
  const size_t lo = static_cast<size_t>(rank);
  const size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

const char* family_color(Family f) {
  switch (f) {
    case Family::Normal: return "#7f7f7f";
    case Family::SkewT: return "#d62728";
    case Family::GenHyperbolic: return "#1f77b4";
    case Family::VarianceGamma: return "#2ca02c";
    case Family::Sal: return "#ff7f0e";
    case Family::Nig: return "#9467bd";
  }
  return "#000000";
}

std::string fmt_pt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

namespace {

// Appends one mean/percentile-band panel (log10 y axis) for the chosen metric.
void append_metric_panel(std::string& svg, const std::vector<StudyRow>& rows,
                         const std::vector<int>& cells,
                         const std::vector<std::string>& labels,
                         const std::function<double(const StudyRow&)>& metric,
                         double xl, double xr, const std::string& title) {
  const std::vector<Family> fams = {Family::Normal,         Family::SkewT,
                                    Family::GenHyperbolic,  Family::VarianceGamma,
                                    Family::Sal,            Family::Nig};
  struct Curve {
    Family family;
    std::vector<double> mean, lo, hi;  // log10 units, one entry per cell
    std::vector<bool> present;
  };
  std::vector<Curve> curves;
  double y_min = 0.0, y_max = 0.0;
  bool have_any = false;
  for (Family fam : fams) {
    Curve cur;
    cur.family = fam;
    bool fam_any = false;
    for (int cell : cells) {
      std::vector<double> vals;
      for (const StudyRow& r : rows) {
        const double v = metric(r);
        if (r.cell == cell && r.fit_family == fam && r.status == "ok" &&
            std::isfinite(v) && v > 0.0)
          vals.push_back(v);
      }
      if (vals.empty()) {
        cur.mean.push_back(0.0);
        cur.lo.push_back(0.0);
        cur.hi.push_back(0.0);
        cur.present.push_back(false);
        continue;
      }
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      const double lo = percentile(vals, 0.025);
      const double hi = percentile(vals, 0.975);
      cur.mean.push_back(std::log10(mean));
      cur.lo.push_back(std::log10(std::max(lo, 1e-12)));
      cur.hi.push_back(std::log10(std::max(hi, 1e-12)));
      cur.present.push_back(true);
      fam_any = true;
      if (!have_any) {
        y_min = cur.lo.back();
        y_max = cur.hi.back();
        have_any = true;
      } else {
        y_min = std::min(y_min, cur.lo.back());
        y_max = std::max(y_max, cur.hi.back());
      }
    }
    if (fam_any) curves.push_back(std::move(cur));
  }
  svg += "<text x=\"" + fmt_pt(xl) +
         "\" y=\"26\" font-size=\"15\" fill=\"#333\">" + title + "</text>\n";
  if (!have_any || cells.empty()) {
    svg += "<text x=\"" + fmt_pt(xl) +
           "\" y=\"270\" font-size=\"14\" fill=\"#666\">no usable rows"
           "</text>\n";
    return;
  }
  y_min = std::floor(y_min - 0.2);
  y_max = std::ceil(y_max + 0.2);
  if (y_max - y_min < 1.0) y_max = y_min + 1.0;
  const double yt = 48, yb = 496;
  const double n_cells = static_cast<double>(cells.size());
  auto x_at = [&](size_t i) {
    return xl + (static_cast<double>(i) + 0.5) * (xr - xl) / n_cells;
  };
  auto y_at = [&](double logv) {
    return yb - (logv - y_min) / (y_max - y_min) * (yb - yt);
  };
  for (int g = static_cast<int>(y_min); g <= static_cast<int>(y_max); ++g) {
    const double y = y_at(g);
    svg += "<line x1=\"" + fmt_pt(xl) + "\" y1=\"" + fmt_pt(y) + "\" x2=\"" +
           fmt_pt(xr) + "\" y2=\"" + fmt_pt(y) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt_pt(xl - 8) + "\" y=\"" + fmt_pt(y + 4) +
           "\" font-size=\"12\" fill=\"#333\" text-anchor=\"end\">1e" +
           std::to_string(g) + "</text>\n";
  }
  for (size_t i = 0; i < cells.size(); ++i) {
    svg += "<text x=\"" + fmt_pt(x_at(i)) + "\" y=\"" + fmt_pt(yb + 20) +
           "\" font-size=\"12\" fill=\"#333\" text-anchor=\"middle\">" +
           labels[i] + "</text>\n";
  }
  svg += "<line x1=\"" + fmt_pt(xl) + "\" y1=\"" + fmt_pt(yb) + "\" x2=\"" +
         fmt_pt(xr) + "\" y2=\"" + fmt_pt(yb) +
         "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
  for (const auto& cur : curves) {
    const std::string color = family_color(cur.family);
    // band polygon: upper edge forward, lower edge backward
    std::string pts;
    for (size_t i = 0; i < cells.size(); ++i)
      if (cur.present[i])
        pts += fmt_pt(x_at(i)) + "," + fmt_pt(y_at(cur.hi[i])) + " ";
    for (size_t i = cells.size(); i-- > 0;)
      if (cur.present[i])
        pts += fmt_pt(x_at(i)) + "," + fmt_pt(y_at(cur.lo[i])) + " ";
    if (!pts.empty())
      svg += "<polygon points=\"" + pts + "\" fill=\"" + color +
             "\" opacity=\"0.12\"/>\n";
    std::string line;
    for (size_t i = 0; i < cells.size(); ++i)
      if (cur.present[i])
        line += fmt_pt(x_at(i)) + "," + fmt_pt(y_at(cur.mean[i])) + " ";
    svg += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    for (size_t i = 0; i < cells.size(); ++i)
      if (cur.present[i])
        svg += "<circle cx=\"" + fmt_pt(x_at(i)) + "\" cy=\"" +
               fmt_pt(y_at(cur.mean[i])) + "\" r=\"3\" fill=\"" + color +
               "\"/>\n";
  }
}

}  // namespace

std::string study_svg(const std::vector<StudyRow>& rows) {
  // Cell labels in cell-index order; both panels share them.
  std::vector<std::pair<int, std::string>> cell_info;
  for (const StudyRow& r : rows) {
    bool seen = false;
    for (const auto& ci : cell_info) seen = seen || ci.first == r.cell;
    if (!seen)
      cell_info.emplace_back(
          r.cell, dims_string(r.dims) + " N=" + std::to_string(r.n_obs));
  }
  std::sort(cell_info.begin(), cell_info.end());
  std::vector<int> cells;
  std::vector<std::string> labels;
  for (const auto& ci : cell_info) {
    cells.push_back(ci.first);
    labels.push_back(ci.second);
  }
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1240\" height=\"560\" "
      "viewBox=\"0 0 1240 560\" font-family=\"sans-serif\">\n"
      "<rect width=\"1240\" height=\"560\" fill=\"#ffffff\"/>\n";
  append_metric_panel(svg, rows, cells, labels,
                      [](const StudyRow& r) { return r.rel_err_mean; }, 70,
                      540, "Mean relative error (mean, 2.5-97.5% band)");
  append_metric_panel(svg, rows, cells, labels,
                      [](const StudyRow& r) { return r.rel_err_kron; }, 620,
                      1090,
                      "Kronecker scale relative error (mean, 2.5-97.5% band)");
  const std::vector<Family> fams = {Family::Normal,         Family::SkewT,
                                    Family::GenHyperbolic,  Family::VarianceGamma,
                                    Family::Sal,            Family::Nig};
  double legend_y = 58;
  for (Family fam : fams) {
    bool used = false;
    for (const StudyRow& r : rows) used = used || r.fit_family == fam;
    if (!used) continue;
    const std::string color = family_color(fam);
    svg += "<rect x=\"1106\" y=\"" + fmt_pt(legend_y - 9) +
           "\" width=\"14\" height=\"14\" fill=\"" + color + "\"/>\n";
    svg += "<text x=\"1126\" y=\"" + fmt_pt(legend_y + 3) +
           "\" font-size=\"13\" fill=\"#333\">" + family_name(fam) +
           "</text>\n";
    legend_y += 22;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace skewtensor
