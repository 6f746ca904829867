#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "skewtensor/ecm.hpp"
#include "skewtensor/io.hpp"
#include "skewtensor/report.hpp"
#include "skewtensor/simulate.hpp"

namespace {

using namespace skewtensor;

std::vector<int> parse_dims(const std::string& s) {
  std::vector<int> dims;
  std::string part;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == 'x') {
      if (part.empty()) throw value_error("bad --dims value: " + s);
      for (char c : part)
        if (c < '0' || c > '9') throw value_error("bad --dims value: " + s);
      dims.push_back(std::atoi(part.c_str()));
      if (dims.back() < 1) throw value_error("bad --dims value: " + s);
      part.clear();
    } else {
      part += s[i];
    }
  }
  if (dims.empty() || dims.size() > 8)
    throw value_error("bad --dims value: " + s);
  return dims;
}

Json load_json(const std::string& path) {
  return Json::parse(read_text_file(path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skewed tensor-variate distributions: fitting, sampling, and "
               "simulation studies"};
  app.require_subcommand(1);

  auto* fit_cmd =
      app.add_subcommand("fit", "Fit one family to a dataset by maximum likelihood");
  std::string fit_data, fit_family, fit_config_path, fit_out, fit_scale;
  fit_cmd->add_option("--data", fit_data,
                      "dataset: .stvd file, .ppm file, or directory of .ppm")
      ->required();
  fit_cmd->add_option("--family", fit_family, "normal|st|gh|vg|sal|nig")
      ->required();
  fit_cmd->add_option("--config", fit_config_path, "fit config json file");
  fit_cmd->add_option("--scale-update", fit_scale, "flipflop|mode1");
  fit_cmd->add_option("--out", fit_out, "fit report json path (default: stdout)");

  auto* sample_cmd =
      app.add_subcommand("sample", "Draw observations from given parameters");
  std::string sample_params, sample_out;
  int sample_n = 1;
  uint64_t sample_seed = 1;
  sample_cmd->add_option("--params", sample_params, "params json file")->required();
  sample_cmd->add_option("--n", sample_n, "number of observations")->required();
  sample_cmd->add_option("--seed", sample_seed, "rng seed (default 1)");
  sample_cmd->add_option("--out", sample_out, "output .stvd path")->required();

  auto* density_cmd =
      app.add_subcommand("density", "Evaluate log-densities of a dataset");
  std::string den_params, den_data, den_family, den_out;
  double den_nu = 0, den_gamma = 0, den_lambda = 0, den_omega = 0, den_kappa = 0;
  density_cmd->add_option("--params", den_params, "params json file")->required();
  density_cmd->add_option("--data", den_data, "dataset path")->required();
  density_cmd->add_option("--family", den_family, "override the params family");
  auto* o_nu = density_cmd->add_option("--nu", den_nu, "override st dof");
  auto* o_gamma = density_cmd->add_option("--gamma", den_gamma, "override vg shape");
  auto* o_lambda = density_cmd->add_option("--lambda", den_lambda, "override gh index");
  auto* o_omega =
      density_cmd->add_option("--omega", den_omega, "override gh concentration");
  auto* o_kappa =
      density_cmd->add_option("--kappa", den_kappa, "override nig concentration");
  density_cmd->add_option("--out", den_out, "json output path (default: stdout lines)");

  auto* sim_cmd = app.add_subcommand(
      "simulate", "Generate one synthetic dataset with known ground truth");
  std::string sim_family, sim_dims_str, sim_out;
  int sim_n = 0;
  uint64_t sim_seed = 1;
  double sim_sigma = 12.0, sim_snr = 0.5, sim_cond = 10.0;
  sim_cmd->add_option("--family", sim_family, "truth family")->required();
  sim_cmd->add_option("--dims", sim_dims_str, "tensor dims, e.g. 8x8x8")->required();
  sim_cmd->add_option("--n", sim_n, "number of observations")->required();
  sim_cmd->add_option("--seed", sim_seed, "rng seed (default 1)");
  sim_cmd->add_option("--skew-sigma", sim_sigma, "skewness entry sd (default 12)");
  sim_cmd->add_option("--snr", sim_snr, "location-to-noise energy ratio (default 0.5)");
  sim_cmd->add_option("--max-cond", sim_cond, "scale condition bound (default 10)");
  sim_cmd->add_option("--out", sim_out, "output prefix")->required();

  auto* study_cmd =
      app.add_subcommand("study", "Run a simulation study over cells and replicates");
  std::string study_profile, study_config, study_out, study_scale;
  uint64_t study_seed = 0;
  study_cmd->add_option("--profile", study_profile, "desk|full")
      ->check(CLI::IsMember({"desk", "full"}));
  study_cmd->add_option("--config", study_config, "study spec json file");
  auto* o_study_seed = study_cmd->add_option("--seed", study_seed, "seed override");
  study_cmd->add_option("--scale-update", study_scale, "flipflop|mode1");
  study_cmd->add_option("--out", study_out, "output csv path")->required();

  auto* report_cmd =
      app.add_subcommand("report", "Render a study csv as an svg figure");
  std::string report_study, report_out;
  report_cmd->add_option("--study", report_study, "study csv path")->required();
  report_cmd->add_option("--out", report_out, "output svg path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*fit_cmd) {
      const std::vector<Tensor> xs = read_dataset_any(fit_data);
      FitConfig cfg;
      if (!fit_config_path.empty())
        cfg = fit_config_from_json(load_json(fit_config_path));
      if (!fit_scale.empty()) cfg.scale_update = scale_update_from_name(fit_scale);
      const FitResult res = fit(xs, family_from_name(fit_family), cfg);
      const std::string text = fit_report_to_json(res).dump(2) + "\n";
      if (fit_out.empty())
        std::cout << text;
      else
        write_text_file(fit_out, text);
    } else if (*sample_cmd) {
      if (sample_n < 1) throw value_error("--n must be >= 1");
      const FamilyParams p = params_from_json(load_json(sample_params));
      Rng rng(sample_seed);
      write_dataset(sample_out, sample(p, sample_n, rng));
    } else if (*density_cmd) {
      FamilyParams p = params_from_json(load_json(den_params));
      if (!den_family.empty()) p.family = family_from_name(den_family);
      if (o_nu->count()) p.dof = den_nu;
      if (o_lambda->count()) p.gh_index = den_lambda;
      if (o_omega->count()) p.gh_concentration = den_omega;
      if (o_kappa->count()) p.nig_concentration = den_kappa;
      if (o_gamma->count()) {
        if (p.family == Family::Sal)
          throw value_error("sal pins the shape to 1; --gamma is not allowed");
        p.vg_shape = den_gamma;
      }
      p.canonicalize();
      p.validate();
      const std::vector<Tensor> xs = read_dataset_any(den_data);
      const FamilyEvaluator ev(p);
      std::vector<double> vals;
      vals.reserve(xs.size());
      for (const Tensor& x : xs) vals.push_back(ev.log_density(ev.quad(x)));
      if (den_out.empty()) {
        for (double v : vals) std::cout << format_double(v) << "\n";
      } else {
        write_text_file(den_out, Json(vals).dump(2) + "\n");
      }
    } else if (*sim_cmd) {
      if (sim_n < 1) throw value_error("--n must be >= 1");
      Rng rng(sim_seed);
      const FamilyParams truth =
          make_truth(family_from_name(sim_family), parse_dims(sim_dims_str),
                     sim_sigma, sim_snr, sim_cond, rng);
      write_dataset(sim_out + ".stvd", sample(truth, sim_n, rng));
      write_text_file(sim_out + "_truth.json", params_to_json(truth).dump(2) + "\n");
      std::cout << "wrote " << sim_out << ".stvd and " << sim_out
                << "_truth.json\n";
    } else if (*study_cmd) {
      if (study_profile.empty() == study_config.empty())
        throw value_error("study needs exactly one of --profile or --config");
      StudySpec spec;
      if (!study_profile.empty())
        spec = study_profile == "desk" ? desk_profile() : full_profile();
      else
        spec = study_spec_from_json(load_json(study_config));
      if (o_study_seed->count()) spec.seed = study_seed;
      if (!study_scale.empty())
        spec.scale_update = scale_update_from_name(study_scale);
      const StudyResult res = run_study(spec);
      write_text_file(study_out, study_csv(res));
      size_t ok = 0;
      for (const StudyRow& r : res.rows) ok += r.status == "ok";
      std::cout << "wrote " << res.rows.size() << " rows (" << ok << " ok) to "
                << study_out << "\n";
    } else if (*report_cmd) {
      const std::vector<StudyRow> rows =
          study_rows_from_csv(read_text_file(report_study));
      write_text_file(report_out, study_svg(rows));
      std::cout << "wrote " << report_out << "\n";
    }
    return 0;
  } catch (const value_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
