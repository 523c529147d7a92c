#include "tptkit/reactive.hpp"

#include "tptkit/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <map>
#include <ostream>

namespace tptkit {

std::vector<ReactiveSegment> segment_reactive(const Trajectory& traj, const Region& a,
                                              const Region& b) {
  std::vector<ReactiveSegment> out;
  const std::size_t n = traj.size();
  bool seeking_b = false;
  std::size_t a_plus = 0, last_a = 0, last_b = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec x = traj.state(i);
    if (!seeking_b) {
      if (b.inside_closure(x)) last_b = i;
      if (a.inside_closure(x)) {
        if (!out.empty() && !out.back().idx_next_A_plus) {
          out.back().idx_B_minus = last_b;
          out.back().x_B_minus = traj.state(last_b);
          out.back().idx_next_A_plus = i;
          out.back().x_next_A_plus = x;
        }
        a_plus = last_a = i;
        seeking_b = true;
      }
      continue;
    }
    if (a.inside_closure(x)) {
      last_a = i;
    } else if (b.inside_closure(x)) {
      ReactiveSegment s;
      s.k = out.size();
      s.stream_id = traj.stream_id;
      s.idx_A_plus = a_plus;
      s.idx_A_minus = last_a;
      s.idx_B_plus = i;
      s.x_A_plus = traj.state(a_plus);
      s.x_A_minus = traj.state(last_a);
      s.x_B_plus = x;
      out.push_back(std::move(s));
      last_b = i;
      seeking_b = false;
    }
  }
  return out;
}

std::vector<Vec> segment_path(const Trajectory& traj, const ReactiveSegment& seg) {
  std::vector<Vec> path;
  path.reserve(seg.idx_B_plus - seg.idx_A_minus + 1);
  for (std::size_t i = seg.idx_A_minus; i <= seg.idx_B_plus; ++i) path.push_back(traj.state(i));
  return path;
}

std::size_t count_transitions(const Trajectory& traj, const Region& a, const Region& b) {
  enum { None, InA, InB } last = None;
  std::size_t count = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Vec x = traj.state(i);
    if (a.inside_closure(x)) {
      last = InA;
    } else if (b.inside_closure(x)) {
      if (last == InA) ++count;
      last = InB;
    }
  }
  return count;
}

BoundaryMeasure empirical_boundary_distribution(const std::vector<ReactiveSegment>& segments,
                                                BoundaryEvent which,
                                                std::shared_ptr<const Region> region,
                                                double max_distance) {
  static const char* names[] = {"mu_A^-", "mu_A^+", "mu_B^-", "mu_B^+"};
  BoundaryMeasure m;
  m.name = names[static_cast<int>(which)];
  m.region = region;
  std::vector<const Vec*> states;
  for (const auto& s : segments) {
    switch (which) {
      case BoundaryEvent::AExit: states.push_back(&s.x_A_minus); break;
      case BoundaryEvent::AEntrance: states.push_back(&s.x_A_plus); break;
      case BoundaryEvent::BEntrance: states.push_back(&s.x_B_plus); break;
      case BoundaryEvent::BExit:
        if (s.x_B_minus) states.push_back(&*s.x_B_minus);
        break;
    }
  }
  if (states.empty()) throw NumericalError("no segments for the empirical boundary distribution");
  std::map<std::size_t, double> mass;
  const double w = 1.0 / static_cast<double>(states.size());
  for (const Vec* x : states) {
    const double d = std::abs(region->signed_distance(*x));
    if (d > max_distance) {
      throw NumericalError(fmt::format(
          "sample {:.3g} away from the boundary of {} (limit {:.3g}): reduce dt", d,
          region->label(), max_distance));
    }
    mass[region->nearest_atom(*x)] += w;
  }
  for (const auto& [atom, weight] : mass) {
    m.atoms.push_back(MeasureAtom{region->atoms()[atom].point, weight, atom});
  }
  return m;
}

ReactionStatistics reaction_statistics(const std::vector<SegmentedRun>& runs) {
  ReactionStatistics st;
  std::vector<double> cycles;
  for (const auto& run : runs) {
    st.total_time += run.duration;
    st.n_transitions += run.segments.size();
    for (const auto& s : run.segments) {
      st.t_ab.push_back(run.dt * static_cast<double>(s.idx_B_plus - s.idx_A_plus));
      st.c_ab.push_back(run.dt * static_cast<double>(s.idx_B_plus - s.idx_A_minus));
      if (s.idx_next_A_plus) {
        st.t_ba.push_back(run.dt * static_cast<double>(*s.idx_next_A_plus - s.idx_B_plus));
        st.c_ba.push_back(run.dt * static_cast<double>(*s.idx_next_A_plus - *s.idx_B_minus));
        cycles.push_back(run.dt * static_cast<double>(*s.idx_next_A_plus - s.idx_A_plus));
      }
      if (s.idx_A_minus < s.idx_A_plus || s.idx_B_plus <= s.idx_A_minus) {
        throw NumericalError("segment violates the stopping-time ordering");
      }
    }
  }
  if (!(st.total_time > 0.0)) throw NumericalError("reaction statistics need a non-empty run");
  st.T_AB = batch_means(st.t_ab);
  st.T_BA = batch_means(st.t_ba);
  st.C_AB = batch_means(st.c_ab);
  st.C_BA = batch_means(st.c_ba);
  st.nu_R.value = static_cast<double>(st.n_transitions) / st.total_time;
  st.nu_R.n = st.n_transitions;
  if (!cycles.empty()) {
    const Estimate cyc = batch_means(cycles);
    st.nu_R.stderr_ = st.nu_R.value * st.nu_R.value * cyc.stderr_;
  }
  if (!st.c_ab.empty() && !(st.C_AB.value < st.T_AB.value)) {
    throw NumericalError("crossover time C_AB is not below the reaction time T_AB");
  }
  return st;
}

ReactiveDensityHistogram::ReactiveDensityHistogram(std::shared_ptr<const Grid> grid)
    : grid_(std::move(grid)), time_(grid_->size(), 0.0) {}

void ReactiveDensityHistogram::add(const Trajectory& traj,
                                   const std::vector<ReactiveSegment>& segments) {
  for (const auto& s : segments) {
    for (std::size_t i = s.idx_A_minus + 1; i < s.idx_B_plus; ++i) {
      time_[grid_->nearest_node(traj.state(i))] += traj.dt;
    }
  }
  total_time_ += traj.duration();
}

ScalarField ReactiveDensityHistogram::field() const {
  std::vector<double> v(grid_->size(), 0.0);
  if (total_time_ > 0.0) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = time_[i] / (total_time_ * grid_->weight(i));
  }
  ScalarField f(grid_, std::move(v));
  f.name = "rho_R_empirical";
  return f;
}

ScalarField empirical_reactive_density(const Trajectory& traj,
                                       const std::vector<ReactiveSegment>& segments,
                                       std::shared_ptr<const Grid> grid) {
  ReactiveDensityHistogram h(std::move(grid));
  h.add(traj, segments);
  return h.field();
}

std::vector<Vec> entrance_chain(const std::vector<SegmentedRun>& runs) {
  std::vector<Vec> chain;
  for (const auto& run : runs) {
    for (const auto& s : run.segments) {
      if (s.x_next_A_plus) chain.push_back(*s.x_next_A_plus);
    }
  }
  return chain;
}

KsResult chain_stationarity(const std::vector<Vec>& chain, const Region& a, const Region& b,
                            double alpha) {
  if (chain.size() < 4) throw NumericalError("entrance chain needs at least 4 points");
  std::vector<double> first, second;
  const std::size_t half = chain.size() / 2;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const double s = a.boundary_coordinate(a.project(chain[i]), b);
    (i < half ? first : second).push_back(s);
  }
  return ks_two_sample(std::move(first), std::move(second), alpha);
}

void write_segments_csv(std::ostream& os, const std::vector<ReactiveSegment>& segments,
                        double dt) {
  os << "k,t_A_plus,t_A_minus,t_B_plus,t_B_minus\n";
  for (const auto& s : segments) {
    os << fmt::format("{},{:.17g},{:.17g},{:.17g},", s.k, dt * static_cast<double>(s.idx_A_plus),
                      dt * static_cast<double>(s.idx_A_minus), dt * static_cast<double>(s.idx_B_plus));
    if (s.idx_B_minus) os << fmt::format("{:.17g}", dt * static_cast<double>(*s.idx_B_minus));
    os << '\n';
  }
}

}  // namespace tptkit
