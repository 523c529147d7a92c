#include "tptkit/pipeline.hpp"

#include "tptkit/error.hpp"
#include "tptkit/field_analysis.hpp"
#include "tptkit/integrate.hpp"
#include "tptkit/pde.hpp"
#include "tptkit/reactive.hpp"
#include "tptkit/tpp.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

namespace tptkit {

namespace fs = std::filesystem;

namespace {

template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const BoxExitError& e) {
    throw BoxExitError(e.step(), fmt::format("stage {}: {}", stage, e.what()));
  } catch (const NumericalError& e) {
    throw NumericalError(fmt::format("stage {}: {}", stage, e.what()));
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("stage {}: {}", stage, e.what()));
  } catch (const Error& e) {
    throw Error(fmt::format("stage {}: {}", stage, e.what()));
  }
}

std::ofstream open_out(const fs::path& p, bool binary = false) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p, binary ? std::ios::binary : std::ios::out);
  if (!f) throw ConfigError("cannot write " + p.string());
  return f;
}

Vec to_vec(const std::vector<double>& v) {
  return v.size() == 1 ? make_vec(v[0]) : make_vec(v[0], v[1]);
}

struct Solved {
  std::shared_ptr<Grid> grid, coarse;
  std::optional<TptFields> f;
  ScalarField u_B, u_A;
  std::optional<TppMeanHitting> v;
  std::optional<ExitEntranceMeasures> meas;
  double nu_R = 0.0;
  TimeQuadratures tq;
  ScalarField rho_R;
};

struct Simulated {
  std::vector<SegmentedRun> runs, runs_half;
  std::optional<ReactiveDensityHistogram> hist;
  std::size_t automaton_mismatch = 0;
  std::vector<ReactiveSegment> all;
};

// max over nodes of |grad q| near each boundary, for the sampled-hitting bias
double boundary_slope_sum(const TptFields& f, const Region& a, const Region& b) {
  double sa = 0.0, sb = 0.0;
  for (const auto& at : a.atoms()) sa = std::max(sa, f.grad_q.interpolate(at.point).norm());
  for (const auto& at : b.atoms()) sb = std::max(sb, f.grad_q.interpolate(at.point).norm());
  return sa + sb;
}

}  // namespace

Stages stages_for(const std::string& command) {
  Stages s;
  if (command == "solve") {
    s.solve = s.fields = true;
  } else if (command == "analyze") {
    s.solve = s.analyze = s.fields = true;
  } else if (command == "simulate") {
    s.simulate = s.trajectories = true;
  } else if (command == "segment") {
    s.solve = s.simulate = s.segment = s.samples = true;
  } else if (command == "tpp") {
    s.solve = s.tpp = s.samples = true;
  } else if (command == "report") {
    s.solve = s.analyze = s.simulate = s.segment = s.tpp = s.mc = true;
  } else if (command == "all") {
    s.solve = s.analyze = s.simulate = s.segment = s.tpp = s.mc = true;
    s.fields = s.samples = true;
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
  return s;
}

Report run_pipeline(const ExperimentConfig& cfg, const PipelineOptions& opt) {
  Stages st = stages_for(opt.command);
  if (opt.command == "report" || opt.command == "all") {
    // optional sections
    st.simulate = st.segment = cfg.simulate.enabled;
    st.tpp = cfg.tpp.enabled;
  }
  if (opt.threads < 1) throw ConfigError("--threads must be at least 1");
  const std::uint64_t seed = opt.seed.value_or(cfg.simulate.seed);
  const fs::path out = opt.out_dir.value_or(cfg.output.directory);
  const std::string format = opt.format.value_or(cfg.output.format);
  if (format != "csv" && format != "json" && format != "binary") {
    throw ConfigError("--format must be csv, json or binary");
  }
  st.trajectories = st.trajectories || (cfg.output.trajectories && st.simulate);
  const bool write = opt.write;
  const auto& an = cfg.analyze;

  Report rep;
  rep.command = opt.command;
  rep.config_hash = hex64(cfg.hash);
  rep.seed = seed;

  const DiffusionModel model = staged("config", [&] { return build_model(cfg.model); });
  rep.model = model.descriptor();
  rep.model_hash = hex64(model.hash());
  auto A = std::make_shared<Region>(cfg.a.build());
  auto B = std::make_shared<Region>(cfg.b.build());
  A->set_label("A");
  B->set_label("B");
  staged("config", [&] {
    check_disjoint(*A, *B);
    A->validate(seed);
    B->validate(seed);
    for (const Region* r : {A.get(), B.get()}) {
      for (const auto& at : r->atoms()) {
        if (!model.box().contains(at.point)) {
          log_warning(fmt::format("region {} reaches outside the bounding box", r->label()));
          break;
        }
      }
    }
  });
  rep.provenance.emplace_back("threads", std::to_string(opt.threads));
  rep.provenance.emplace_back("execution", "sequential");
  rep.provenance.emplace_back("rng", "mt19937_64 seeded per (seed, stream) via splitmix64");

  // ---- solve
  Solved S;
  if (st.solve || st.tpp || st.segment || st.analyze || st.mc) {
    staged("solve", [&] {
      S.grid = std::make_shared<Grid>(model.box(), cfg.nodes);
      S.grid->classify(*A, *B);
      const double h = S.grid->max_spacing();
      for (const Region* r : {A.get(), B.get()}) {
        if (r->kind() == Region::Kind::Ball && h > r->radius() / 8.0) {
          throw ConfigError(fmt::format("grid spacing {:.3g} does not resolve region {} (radius {:.3g})",
                                        h, r->label(), r->radius()));
        }
      }
      S.coarse = std::make_shared<Grid>(model.box(), cfg.histogram_nodes);
      S.coarse->classify(*A, *B);

      SolverStats sq, sqt, su, sv;
      ScalarField rho = invariant_density(model, S.grid);
      ScalarField q = solve_committor(model, S.grid, *A, *B, &sq);
      ScalarField qt = solve_backward_committor(model, S.grid, *A, *B, rho, &sqt);
      S.f = make_tpt_fields(rho, q, qt);
      S.u_B = solve_mean_hitting_time(model, S.grid, *B, &su);
      S.u_A = solve_mean_hitting_time(model, S.grid, *A);
      S.v = solve_tpp_mean_hitting(model, q, *A, *B, &sv);
      rep.provenance.emplace_back("linear_solver", sq.method);
      rep.statistics.emplace_back("solver_iterations_q", static_cast<double>(sq.iterations));
      rep.statistics.emplace_back("solver_residual_q", sq.relative_residual);
      rep.statistics.emplace_back("solver_iterations_qtilde", static_cast<double>(sqt.iterations));
      rep.statistics.emplace_back("solver_iterations_u_B", static_cast<double>(su.iterations));
      rep.statistics.emplace_back("solver_iterations_v_B", static_cast<double>(sv.iterations));
      rep.statistics.emplace_back("v_B_unreachable_nodes", static_cast<double>(S.v->unreachable_nodes));

      S.meas = exit_entrance_measures(model, *S.f, A, B);
      S.nu_R = rate_quadrature(model, *S.f);
      S.tq = time_quadratures(*S.f, S.nu_R);
      S.rho_R = reactive_density_field(*S.f);
      rep.statistics.emplace_back("nu", S.meas->nu);
      rep.statistics.emplace_back("nu_R", S.nu_R);
      rep.statistics.emplace_back("T_AB", S.tq.T_AB);
      rep.statistics.emplace_back("T_BA", S.tq.T_BA);
      rep.statistics.emplace_back("C_AB", S.tq.C_AB);
      rep.statistics.emplace_back("C_BA", S.tq.C_BA);

      const auto& qv = q.values();
      const auto& qtv = qt.values();
      double dev = 0.0;
      for (std::size_t i = 0; i < qv.size(); ++i) dev = std::max(dev, std::abs(qtv[i] - (1.0 - qv[i])));
      if (model.reversible()) {
        rep.identities.push_back(at_most_row("qtilde_vs_one_minus_q", "solve", dev, an.pointwise_tolerance));
      } else {
        rep.identities.push_back(exceeds_row("qtilde_departs_from_one_minus_q", "solve", dev, 0.01));
      }
      rep.identities.push_back(relative_row("nu_measure_vs_rate", "solve", S.meas->nu, 0.0, S.nu_R,
                                            an.identity_tolerance));
      rep.identities.push_back(relative_row("mass_eta_A_minus_vs_eta_B_plus", "solve",
                                            S.meas->raw_A_minus, 0.0, S.meas->raw_B_plus,
                                            an.identity_tolerance));
      rep.identities.push_back(relative_row("mass_eta_A_plus_vs_eta_B_minus", "solve",
                                            S.meas->raw_A_plus, 0.0, S.meas->raw_B_minus,
                                            an.identity_tolerance));
      rep.identities.push_back(relative_row("reciprocal_rate_quadrature", "solve", 1.0 / S.nu_R, 0.0,
                                            S.tq.T_AB + S.tq.T_BA, 1e-8));
      const double t_ab = S.meas->eta_A_plus.integrate(
          [&](const MeasureAtom& m) { return S.u_B.interpolate(m.point); });
      const double t_ba = S.meas->eta_B_plus.integrate(
          [&](const MeasureAtom& m) { return S.u_A.interpolate(m.point); });
      const double c_ab = S.meas->eta_A_minus.integrate(
          [&](const MeasureAtom& m) { return S.v->boundary_a[m.atom]; });
      rep.identities.push_back(relative_row("T_AB_vs_hitting_time", "solve", S.tq.T_AB, 0.0, t_ab,
                                            an.time_tolerance));
      rep.identities.push_back(relative_row("T_BA_vs_hitting_time", "solve", S.tq.T_BA, 0.0, t_ba,
                                            an.time_tolerance));
      rep.identities.push_back(relative_row("C_AB_vs_tpp_hitting_time", "solve", S.tq.C_AB, 0.0, c_ab,
                                            an.time_tolerance));
      rep.identities.push_back(exceeds_row("T_AB_minus_C_AB", "solve", S.tq.T_AB - S.tq.C_AB, 0.0));
      rep.identities.push_back(equal_row("hopf_sign_violations", "solve",
                                         static_cast<double>(hopf_violations(model, *S.f, *A, *B)), 0.0));
      if (model.reversible()) {
        double diff = 0.0, wmax = 0.0;
        const auto wp = S.meas->eta_A_plus.weights_per_atom();
        const auto wm = S.meas->eta_A_minus.weights_per_atom();
        for (std::size_t i = 0; i < wp.size(); ++i) {
          diff = std::max(diff, std::abs(wp[i] - wm[i]));
          wmax = std::max(wmax, std::abs(wm[i]));
        }
        rep.identities.push_back(at_most_row("eta_A_plus_vs_eta_A_minus", "solve",
                                             wmax > 0 ? diff / wmax : diff, an.pointwise_tolerance));
      }

      if (write && st.fields) {
        S.rho_R.name = "rho_R";
        S.u_B.name = "u_B";
        S.u_A.name = "u_A";
        ScalarField vb = S.v->v;
        vb.name = "v_B";
        for (const ScalarField* fld : {&S.f->rho, &S.f->q, &S.f->qt, &S.u_B, &S.u_A, &vb, &S.rho_R}) {
          auto os = open_out(out / "fields" / (fld->name + ".field"));
          write_field(os, *fld);
        }
        auto os = open_out(out / "measures.csv");
        os << "measure,atom,x,y,weight,coordinate\n";
        for (const BoundaryMeasure* m : {&S.meas->eta_A_minus, &S.meas->eta_A_plus,
                                         &S.meas->eta_B_minus, &S.meas->eta_B_plus}) {
          const Region& other = m->region.get() == A.get() ? *B : *A;
          for (const auto& at : m->atoms) {
            os << fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g}\n", m->name, at.atom, at.point[0],
                              at.point.size() > 1 ? at.point[1] : 0.0, at.weight,
                              m->region->boundary_coordinate(at.point, other));
          }
        }
      }
    });
  }

  // ---- simulate + segment
  Simulated X;
  if (st.simulate) {
    if (!cfg.simulate.enabled) throw ConfigError("this command needs a [simulate] section with time > 0");
    staged("simulate", [&] {
      const Vec x0 = cfg.simulate.x0 ? to_vec(*cfg.simulate.x0) : A->centre();
      const int ns = cfg.simulate.n_streams;
      if (st.segment) X.hist.emplace(S.coarse);
      auto run = [&](double dt, std::uint64_t stream_base, std::vector<SegmentedRun>& runs,
                     const std::string& tag) {
        const auto steps = static_cast<std::size_t>(std::ceil(cfg.simulate.time / (dt * ns)));
        for (int s = 0; s < ns; ++s) {
          const std::uint64_t id = stream_base + static_cast<std::uint64_t>(s);
          const Trajectory tr = simulate(model, x0, dt, steps, seed, id);
          if (write && st.trajectories) {
            if (format == "binary") {
              auto os = open_out(out / "trajectories" / fmt::format("{}_s{}.bin", tag, id), true);
              write_trajectory_binary(os, tr);
            } else {
              auto os = open_out(out / "trajectories" / fmt::format("{}_s{}.csv", tag, id));
              write_trajectory_csv(os, tr);
            }
          }
          if (!st.segment) continue;
          auto segs = staged("segment", [&] { return segment_reactive(tr, *A, *B); });
          X.automaton_mismatch += segs.size() != count_transitions(tr, *A, *B);
          if (&runs == &X.runs) {
            X.hist->add(tr, segs);
            X.all.insert(X.all.end(), segs.begin(), segs.end());
          }
          if (write && st.samples) {
            auto os = open_out(out / "segments" / fmt::format("{}_s{}.csv", tag, id));
            write_segments_csv(os, segs, dt);
          }
          runs.push_back({std::move(segs), dt, tr.duration()});
        }
      };
      run(cfg.simulate.dt, 0, X.runs, "dt");
      if (cfg.simulate.refine) run(0.5 * cfg.simulate.dt, 100000, X.runs_half, "half_dt");
    });
  }

  std::optional<ReactionStatistics> RS;
  if (st.segment) {
    staged("segment", [&] {
      const double k = an.sigma;
      RS = reaction_statistics(X.runs);
      const auto& r = *RS;
      rep.statistics.emplace_back("n_transitions", static_cast<double>(r.n_transitions));
      rep.statistics.emplace_back("simulated_time", r.total_time);
      rep.rows.push_back(equal_row("segments_vs_automaton_mismatches", "segment",
                                   static_cast<double>(X.automaton_mismatch), 0.0));
      rep.rows.push_back(relative_row("nu_R", "segment", r.nu_R.value, r.nu_R.stderr_, S.nu_R,
                                      an.rate_tolerance));
      rep.rows.push_back(sigma_row("T_AB", "segment", r.T_AB.value, r.T_AB.stderr_, S.tq.T_AB, k));
      rep.rows.push_back(sigma_row("T_BA", "segment", r.T_BA.value, r.T_BA.stderr_, S.tq.T_BA, k));
      rep.rows.push_back(sigma_row("C_AB", "segment", r.C_AB.value, r.C_AB.stderr_, S.tq.C_AB, k));
      rep.rows.push_back(sigma_row("C_BA", "segment", r.C_BA.value, r.C_BA.stderr_, S.tq.C_BA, k));
      rep.rows.push_back(relative_row("reciprocal_rate", "segment", 1.0 / r.nu_R.value, 0.0,
                                      r.T_AB.value + r.T_BA.value, an.reciprocal_tolerance));
      rep.rows.push_back(at_most_row("rho_R_normalized_l1", "segment",
                                     normalized_l1(X.hist->field(), S.rho_R, *A, *B),
                                     an.density_tolerance));
      if (cfg.simulate.refine) {
        const auto r2 = reaction_statistics(X.runs_half);
        rep.statistics.emplace_back("n_transitions_half_dt", static_cast<double>(r2.n_transitions));
        rep.rows.push_back(relative_row("nu_R_half_dt", "segment", r2.nu_R.value, r2.nu_R.stderr_,
                                        S.nu_R, an.rate_tolerance));
        rep.rows.push_back(sigma_row("nu_R_dt_vs_half_dt", "segment", r.nu_R.value,
                                     std::hypot(r.nu_R.stderr_, r2.nu_R.stderr_), r2.nu_R.value, k));
        rep.rows.push_back(sigma_row("T_AB_half_dt", "segment", r2.T_AB.value, r2.T_AB.stderr_, S.tq.T_AB, k));
        rep.rows.push_back(sigma_row("C_AB_half_dt", "segment", r2.C_AB.value, r2.C_AB.stderr_, S.tq.C_AB, k));
      }

      const double reach = std::max(20.0 * S.grid->max_spacing(),
                                    10.0 * std::sqrt(2.0 * model.Lambda() * cfg.simulate.dt));
      const BoundaryMeasure mu_A_minus =
          empirical_boundary_distribution(X.all, BoundaryEvent::AExit, A, reach);
      const BoundaryMeasure mu_B_plus =
          empirical_boundary_distribution(X.all, BoundaryEvent::BEntrance, B, reach);
      if (model.dim() == 1) {
        // far endpoint of A: the atom farther from B
        double far_mass = 0.0, far_dist = -1.0;
        for (const auto& at : A->atoms()) {
          const double d = B->signed_distance(at.point);
          if (d > far_dist) far_dist = d;
        }
        for (const auto& m : mu_A_minus.atoms) {
          if (B->signed_distance(m.point) >= far_dist - 1e-12) far_mass += m.weight;
        }
        rep.rows.push_back(at_most_row("exit_mass_far_endpoint", "segment", far_mass, 1e-3));
      } else {
        const auto wa = weak_distance(mu_A_minus, S.meas->eta_A_minus, *B);
        const auto wb = weak_distance(mu_B_plus, S.meas->eta_B_plus, *A);
        const char* fn[] = {"1", "s", "s2"};
        for (int i = 0; i < 3; ++i) {
          rep.rows.push_back(at_most_row(fmt::format("eta_A_minus_empirical_weak_{}", fn[i]), "segment",
                                         wa[static_cast<std::size_t>(i)], an.weak_tolerance));
          rep.rows.push_back(at_most_row(fmt::format("eta_B_plus_empirical_weak_{}", fn[i]), "segment",
                                         wb[static_cast<std::size_t>(i)], an.weak_tolerance));
        }
      }
      const KsResult chain = chain_stationarity(entrance_chain(X.runs), *A, *B, an.ks_alpha);
      ReportRow row = at_most_row("entrance_chain_stationarity_ks", "segment", chain.statistic,
                                  chain.critical_value);
      row.note = fmt::format("p = {:.6g}", chain.p_value);
      rep.rows.push_back(row);
    });
  }

  // ---- tpp
  if (st.tpp) {
    if (!cfg.tpp.enabled) throw ConfigError("this command needs a [tpp] section");
    staged("tpp", [&] {
      const TppField field(model, S.f->q, *A, *B);
      TppOptions to;
      to.dt_max = cfg.tpp.dt_max;
      to.c_safe = cfg.tpp.c_safe;
      to.record_path = false;
      const std::uint64_t tseed = seed + 1;
      std::vector<double> times;
      std::vector<Vec> hits;
      std::size_t reentries = 0, rejected = 0;
      std::optional<ScalarField> occupation;
      if (cfg.tpp.start) {
        const Vec y0 = to_vec(*cfg.tpp.start);
        for (std::size_t i = 0; i < cfg.tpp.n_paths; ++i) {
          const TppPath p = sample_tpp(field, y0, to, tseed, i + 1);
          times.push_back(p.hitting_time);
          hits.push_back(B->project(p.terminal));
          reentries += p.a_reentries;
          rejected += p.rejected_steps;
        }
        RunningStats rs;
        for (double t : times) rs.add(t);
        rep.rows.push_back(sigma_row("tpp_mean_hitting_from_start", "tpp", rs.mean(),
                                     rs.stderr_of_mean(), S.v->v.interpolate(y0), an.sigma));
      } else {
        TppEnsemble ens = tpp_ensemble(field, S.meas->eta_A_minus.normalized(), cfg.tpp.n_paths,
                                       S.coarse, to, tseed);
        times = ens.crossover_times;
        hits = ens.hit_points;
        reentries = ens.a_reentries;
        rejected = ens.rejected_steps;
        RunningStats rs;
        for (double t : times) rs.add(t);
        rep.rows.push_back(sigma_row("tpp_crossover_mean", "tpp", rs.mean(), rs.stderr_of_mean(),
                                     S.tq.C_AB, an.sigma));
        occupation = ens.occupation;
        for (auto& v : occupation->values()) v *= S.nu_R;
        rep.rows.push_back(at_most_row("tpp_occupation_l1", "tpp",
                                       relative_l1(*occupation, S.rho_R, *A, *B), an.density_tolerance));
      }
      rep.rows.push_back(equal_row("tpp_A_reentries", "tpp", static_cast<double>(reentries), 0.0));
      rep.statistics.emplace_back("tpp_rejected_steps", static_cast<double>(rejected));
      if (RS && !cfg.tpp.start) {
        const KsResult ks = ks_two_sample(RS->c_ab, times, an.ks_alpha);
        ReportRow row = at_most_row("crossover_time_ks", "tpp", ks.statistic, ks.critical_value);
        row.note = fmt::format("p = {:.6g}", ks.p_value);
        rep.rows.push_back(row);
        if (model.dim() == 2) {
          std::vector<double> sx, sy;
          for (const auto& s : X.all) sx.push_back(B->boundary_coordinate(B->project(s.x_B_plus), *A));
          for (const auto& h : hits) sy.push_back(B->boundary_coordinate(h, *A));
          const KsResult kh = ks_two_sample(sx, sy, an.ks_alpha);
          ReportRow hr = at_most_row("b_hitting_position_ks", "tpp", kh.statistic, kh.critical_value);
          hr.note = fmt::format("p = {:.6g}", kh.p_value);
          rep.rows.push_back(hr);
        }
      }
      if (write && st.samples) {
        auto os = open_out(out / "tpp_samples.csv");
        os << "path,crossover_time,hit_x,hit_y,hit_coordinate\n";
        for (std::size_t i = 0; i < times.size(); ++i) {
          os << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", i, times[i], hits[i][0],
                            hits[i].size() > 1 ? hits[i][1] : 0.0, B->boundary_coordinate(hits[i], *A));
        }
        if (occupation) {
          occupation->name = "tpp_occupation";
          auto of = open_out(out / "fields" / "tpp_occupation.field");
          write_field(of, *occupation);
        }
      }
    });
  }

  // ---- analyze
  if (st.analyze) {
    staged("analyze", [&] {
      const VectorField J = current_field(model, *S.f);
      const double div = divergence_check(J);
      rep.identities.push_back(at_most_row("current_divergence", "analyze", div, an.divergence_tolerance));
      double jmax = 0.0;
      for (std::size_t i = 0; i < S.grid->size(); ++i) {
        if (S.grid->kind(i) == NodeKind::Theta) jmax = std::max(jmax, J.at(i).norm());
      }
      if (model.reversible()) {
        const VectorField Jr = reversible_current(model, *S.f);
        double d = 0.0;
        for (std::size_t i = 0; i < S.grid->size(); ++i) {
          if (S.grid->kind(i) == NodeKind::Theta) d = std::max(d, (J.at(i) - Jr.at(i)).norm());
        }
        rep.identities.push_back(at_most_row("reversible_current_shortcut", "analyze", d / jmax,
                                             an.pointwise_tolerance));
      }
      std::vector<double> fluxes;
      for (double s : an.surfaces) {
        SeparatingSurface surf;
        if (model.dim() == 1) {
          surf.kind = SeparatingSurface::Kind::Point;
          surf.centre = make_vec(s);
        } else {
          surf.kind = SeparatingSurface::Kind::Circle;
          surf.centre = A->centre();
          surf.radius = s;
        }
        fluxes.push_back(surface_flux(J, surf, *A, *B));
        rep.identities.push_back(relative_row(fmt::format("surface_flux_{}_vs_rate", fluxes.size()),
                                              "analyze", fluxes.back(), 0.0, S.nu_R,
                                              an.flux_rate_tolerance));
      }
      for (std::size_t i = 0; i < fluxes.size(); ++i) {
        for (std::size_t j = i + 1; j < fluxes.size(); ++j) {
          rep.identities.push_back(relative_row(fmt::format("surface_flux_{}_vs_{}", i + 1, j + 1),
                                                "analyze", fluxes[i], 0.0, fluxes[j], an.flux_tolerance));
        }
      }
      const StreamlineMap sm = streamline_map(J, S.meas->eta_A_minus, B);
      rep.statistics.emplace_back("streamlines", static_cast<double>(sm.n_streamlines));
      rep.statistics.emplace_back("streamline_omitted_mass", sm.omitted_mass);
      rep.statistics.emplace_back("streamline_stagnated_mass", sm.stagnated_mass);
      const auto w = weak_distance(sm.pushforward.normalized(), S.meas->eta_B_plus, *A);
      const char* fn[] = {"1", "s", "s2"};
      for (int i = 0; i < 3; ++i) {
        rep.identities.push_back(at_most_row(fmt::format("streamline_pushforward_weak_{}", fn[i]),
                                             "analyze", w[static_cast<std::size_t>(i)], an.weak_tolerance));
      }
      if (write && st.fields) {
        VectorField jj = J;
        jj.name = "J_R";
        auto os = open_out(out / "fields" / "J_R.field");
        write_field(os, jj);
      }
    });
  }

  // ---- Monte Carlo committor probes
  if (st.mc && !an.mc_probes.empty()) {
    staged("mc", [&] {
      const int d = model.dim();
      const std::size_t np = an.mc_probes.size() / static_cast<std::size_t>(d);
      const double slopes = boundary_slope_sum(*S.f, *A, *B);
      for (std::size_t j = 0; j < an.mc_dt.size(); ++j) {
        const double dt = an.mc_dt[j];
        for (std::size_t i = 0; i < np; ++i) {
          const Vec x = d == 1 ? make_vec(an.mc_probes[i])
                               : make_vec(an.mc_probes[2 * i], an.mc_probes[2 * i + 1]);
          const std::uint64_t offset = (j * np + i) * an.mc_samples;
          const McEstimate e = committor_mc_estimate(model, *A, *B, x, dt, an.mc_samples, seed + 2,
                                                     50'000'000, offset);
          rep.rows.push_back(sigma_row(fmt::format("committor_mc_p{}_dt{}", i + 1, j + 1), "mc", e.mean,
                                       e.stderr_, S.f->q.interpolate(x), an.sigma,
                                       sampled_hitting_bias_bound(model.Lambda(), dt, slopes)));
        }
      }
    });
  }

  if (write) {
    {
      auto os = open_out(out / "report.json");
      write_report_json(os, rep);
    }
    if (format == "csv") {
      auto os = open_out(out / "report.csv");
      write_report_csv(os, rep);
    }
  }
  return rep;
}

}  // namespace tptkit
