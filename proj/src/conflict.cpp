#include "icat/conflict.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

namespace icat {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Index shift o such that frame k of `a` shares its timestamp with frame k + o of `b`.
long frame_offset(const Trajectory& a, const Trajectory& b) {
  if (std::abs(a.dt - b.dt) > 1e-12) throw InvalidParameter("trajectories use different dt");
  const double raw = (a.start_time - b.start_time) / a.dt;
  const double r = std::round(raw);
  if (std::abs(raw - r) > 1e-6)
    throw InvalidParameter("trajectory start times are not aligned to the frame grid");
  return static_cast<long>(r);
}

struct Overlap {
  std::size_t a_begin = 0;
  std::size_t a_end = 0;  // exclusive
  long offset = 0;
};

Overlap overlap(const Trajectory& a, const Trajectory& b) {
  Overlap o;
  o.offset = frame_offset(a, b);
  const long na = static_cast<long>(a.frames.size());
  const long nb = static_cast<long>(b.frames.size());
  const long lo = std::max(0L, -o.offset);
  const long hi = std::min(na, nb - o.offset);
  if (hi > lo) {
    o.a_begin = static_cast<std::size_t>(lo);
    o.a_end = static_cast<std::size_t>(hi);
  }
  return o;
}

ConflictKind classify(const Trajectory& a, std::size_t ka, const Trajectory& b, std::size_t kb) {
  const auto& fa = a.frames[ka];
  const auto& fb = b.frames[kb];
  if (fa.edge == fb.edge && std::abs(wrap_angle(fa.heading - fb.heading)) < 0.5 * kPi)
    return ConflictKind::rear_end;
  std::set<EdgeId> ahead_a;
  for (std::size_t k = ka; k < a.frames.size(); ++k) ahead_a.insert(a.frames[k].edge);
  for (std::size_t k = kb; k < b.frames.size(); ++k)
    if (ahead_a.count(b.frames[k].edge)) return ConflictKind::merging;
  return ConflictKind::crossing;
}

std::optional<Conflict> pair_conflict(const Trajectory& a, const Trajectory& b,
                                      const SeparationParams& p) {
  const bool swap = b.car_id < a.car_id;
  const Trajectory& x = swap ? b : a;
  const Trajectory& y = swap ? a : b;
  const Overlap o = overlap(x, y);
  for (std::size_t k = o.a_begin; k < o.a_end; ++k) {
    const auto ky = static_cast<std::size_t>(static_cast<long>(k) + o.offset);
    const double dist = distance(x.frames[k].position(), y.frames[ky].position());
    if (dist < p.d_safe) return Conflict{x.car_id, y.car_id, k, dist, classify(x, k, y, ky)};
  }
  return std::nullopt;
}

double distance_to_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return distance(p, a + ab * t);
}

const Trajectory* find_car(std::span<const Trajectory> all, CarId id) {
  for (const auto& t : all)
    if (t.car_id == id) return &t;
  return nullptr;
}

// Candidate is acceptable when it never runs ahead of the original plan and
// keeps d_safe (or at least the current gap, if already closer) to everyone.
bool acceptable(const Trajectory& cand, const Trajectory* original,
                std::span<const Trajectory> others, const SeparationParams& p,
                const PlanContext* ctx = nullptr) {
  if (ctx && !cand.empty()) {
    if (ends_in_keep_clear(cand, ctx->keep_clear)) return false;
    if (cand.frames.back().v < kKeepClearSpeed) {
      for (const auto& st : ctx->no_stop) {
        const double need =
            std::min(p.d_safe, distance_to_stretch(st, cand.frames.front().position())) - 1e-9;
        if (distance_to_stretch(st, cand.frames.back().position()) < need) return false;
      }
    }
  }
  if (original) {
    const std::size_t n = std::min(cand.frames.size(), original->frames.size());
    for (std::size_t k = 0; k < n; ++k)
      if (cand.frames[k].s > original->frames[k].s + 1e-9) return false;
  }
  for (const auto& o : others) {
    if (o.car_id == cand.car_id || o.empty()) continue;
    const Overlap ov = overlap(cand, o);
    if (ov.a_end <= ov.a_begin) continue;
    auto at = [&](std::size_t k) {
      const auto ko = static_cast<std::size_t>(static_cast<long>(k) + ov.offset);
      return distance(cand.frames[k].position(), o.frames[ko].position());
    };
    const double need = std::min(p.d_safe, at(ov.a_begin)) - 1e-9;
    for (std::size_t k = ov.a_begin; k < ov.a_end; ++k)
      if (at(k) < need) return false;
  }
  return true;
}

Trajectory replan_candidates(const PlanContext& yielder, std::span<const Trajectory> trajectories,
                             const SeparationParams& p, const PlannerParams& pp);

Trajectory build(const PlanContext& ctx, const LongitudinalProfile& profile,
                 const PlannerParams& pp) {
  return build_trajectory(*ctx.path, ctx.fs, profile, pp, ctx.speed_limit, ctx.car_id,
                          ctx.start_time);
}

}  // namespace

double distance_to_stretch(const PathStretch& st, Vec2 point) {
  if (!st.path || st.path->segments.empty()) return std::numeric_limits<double>::infinity();
  const double lo = std::clamp(st.s0, 0.0, st.path->total_length);
  const double hi = std::clamp(st.s1, lo, st.path->total_length);
  constexpr double kStep = 0.1;
  const int n = static_cast<int>(std::ceil((hi - lo) / kStep));
  double best = std::numeric_limits<double>::infinity();
  Vec2 prev = st.path->pose_at(lo).position;
  if (n == 0) return distance(point, prev);
  for (int i = 1; i <= n; ++i) {
    const Vec2 cur = st.path->pose_at(std::min(hi, lo + kStep * i)).position;
    best = std::min(best, distance_to_segment(point, prev, cur));
    prev = cur;
  }
  return best;
}

bool ends_in_keep_clear(const Trajectory& traj,
                        const std::vector<std::pair<double, double>>& keep_clear) {
  if (traj.empty()) return false;
  const auto& last = traj.frames.back();
  for (const auto& [lo, hi] : keep_clear)
    if (last.s > lo && last.s < hi && last.v < kKeepClearSpeed) return true;
  return false;
}

std::string to_string(ConflictKind k) {
  switch (k) {
    case ConflictKind::rear_end: return "rear_end";
    case ConflictKind::crossing: return "crossing";
    case ConflictKind::merging: return "merging";
  }
  return "crossing";
}

std::string to_string(PriorityRule r) {
  return r == PriorityRule::lower_id ? "lower_id" : "earlier_arrival";
}

void SeparationParams::validate(double vehicle_length) const {
  if (!(d_safe >= vehicle_length))
    throw InvalidParameter("separation.d_safe must be >= vehicle length");
  if (max_rounds < 1) throw InvalidParameter("separation.max_rounds must be >= 1");
}

std::vector<Conflict> detect(const Trajectory& traj, std::span<const Trajectory> all,
                             const SeparationParams& p) {
  std::vector<Conflict> out;
  for (const auto& other : all) {
    if (other.car_id == traj.car_id) continue;
    if (std::abs(other.dt - traj.dt) > 1e-12)
      throw InvalidParameter("trajectories use different dt");
    if (traj.empty() || other.empty()) continue;
    if (auto c = pair_conflict(traj, other, p)) out.push_back(*c);
  }
  std::sort(out.begin(), out.end(), [](const Conflict& a, const Conflict& b) {
    return std::tie(a.car_a, a.car_b) < std::tie(b.car_a, b.car_b);
  });
  return out;
}

std::vector<Conflict> detect_all(std::span<const Trajectory> all, const SeparationParams& p) {
  std::vector<Conflict> out;
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      if (all[i].car_id == all[j].car_id) continue;
      if (std::abs(all[i].dt - all[j].dt) > 1e-12)
        throw InvalidParameter("trajectories use different dt");
      if (all[i].empty() || all[j].empty()) continue;
      if (auto c = pair_conflict(all[i], all[j], p)) out.push_back(*c);
    }
  }
  std::sort(out.begin(), out.end(), [](const Conflict& a, const Conflict& b) {
    return std::tie(a.car_a, a.car_b) < std::tie(b.car_a, b.car_b);
  });
  return out;
}

double min_separation(const Trajectory& a, const Trajectory& b) {
  double best = std::numeric_limits<double>::infinity();
  if (a.empty() || b.empty()) return best;
  const Overlap o = overlap(a, b);
  for (std::size_t k = o.a_begin; k < o.a_end; ++k) {
    const auto kb = static_cast<std::size_t>(static_cast<long>(k) + o.offset);
    best = std::min(best, distance(a.frames[k].position(), b.frames[kb].position()));
  }
  return best;
}

CarId conflict_winner(const Conflict& c, const Trajectory& a, const Trajectory& b,
                      const SeparationParams& p) {
  const Trajectory& x = a.car_id == c.car_a ? a : b;
  const Trajectory& y = a.car_id == c.car_a ? b : a;
  if (p.priority_rule == PriorityRule::lower_id) return std::min(x.car_id, y.car_id);

  const Overlap o = overlap(x, y);
  const std::size_t kx = c.frame_index;
  const auto ky = static_cast<std::size_t>(static_cast<long>(kx) + o.offset);
  // A car arrives when it first comes within d_safe of the spot the other car
  // occupies at the conflict frame.
  auto arrival = [&](const Trajectory& t, std::size_t limit, Vec2 spot) {
    for (std::size_t k = 0; k <= limit && k < t.frames.size(); ++k)
      if (distance(t.frames[k].position(), spot) <= p.d_safe)
        return t.start_time + static_cast<double>(k) * t.dt;
    return t.start_time + static_cast<double>(limit) * t.dt;
  };
  const double tx = arrival(x, kx, y.frames[ky].position());
  const double ty = arrival(y, ky, x.frames[kx].position());
  if (std::abs(tx - ty) > 1e-9) return tx < ty ? x.car_id : y.car_id;

  // Same arrival: the car in front keeps going.
  const auto& fx = x.frames[o.a_begin];
  const auto& fy = y.frames[static_cast<std::size_t>(static_cast<long>(o.a_begin) + o.offset)];
  const double ax = unit_from_heading(fx.heading).dot(fx.position() - fy.position());
  const double ay = unit_from_heading(fy.heading).dot(fy.position() - fx.position());
  if (std::abs(ax - ay) > 1e-9) return ax > ay ? x.car_id : y.car_id;
  return std::min(x.car_id, y.car_id);
}

Trajectory replan_stop(const PlanContext& yielder, std::span<const Trajectory> trajectories,
                       const SeparationParams& p, const PlannerParams& pp) {
  if (!yielder.path) throw InvalidParameter("replan: missing path");
  const Trajectory* original = find_car(trajectories, yielder.car_id);
  const double s0 = yielder.fs.s;
  const double v0 = std::max(yielder.fs.s_dot, 0.0);
  if (v0 <= 1e-9) return build(yielder, stop_profile(s0, 0.0, 0.0, pp), pp);

  const double d_min = min_stop_distance(v0, pp);
  double d_hi = d_min;
  if (original && !original->empty()) d_hi = std::max(d_min, original->frames.back().s - s0);
  constexpr double kStep = 0.1;
  const int n = std::min(400, static_cast<int>(std::floor((d_hi - d_min) / kStep)));
  for (int j = 0; j <= n; ++j) {
    const double dist = d_hi - kStep * j;
    Trajectory cand = build(yielder, stop_profile(s0, v0, dist, pp), pp);
    if (acceptable(cand, original, trajectories, p, &yielder)) return cand;
  }
  Trajectory fallback = build(yielder, stop_profile(s0, v0, d_min, pp), pp);
  if (original && !acceptable(fallback, original, {}, p)) return *original;
  return fallback;
}

Trajectory replan(const PlanContext& yielder, std::span<const Conflict> conflicts,
                  std::span<const Trajectory> trajectories, const SeparationParams& p,
                  const PlannerParams& pp) {
  const Trajectory* original = find_car(trajectories, yielder.car_id);
  if (conflicts.empty() && original) return *original;
  return replan_candidates(yielder, trajectories, p, pp);
}

namespace {

Trajectory replan_candidates(const PlanContext& yielder, std::span<const Trajectory> trajectories,
                             const SeparationParams& p, const PlannerParams& pp) {
  if (!yielder.path) throw InvalidParameter("replan: missing path");
  const Trajectory* original = find_car(trajectories, yielder.car_id);

  const double s0 = yielder.fs.s;
  const double v_max = std::min(yielder.speed_limit, pp.cruise_speed_cap);
  for (int i = 10; i >= 1; --i) {
    const double lambda = i / 10.0;
    const double s1 = s0 + lambda * (yielder.target.s1 - s0);
    const double v1 = lambda * yielder.target.v1;
    Trajectory cand = build(
        yielder,
        longitudinal_profile(s0, yielder.fs.s_dot, yielder.fs.s_ddot, s1, v1, pp, v_max), pp);
    if (acceptable(cand, original, trajectories, p, &yielder)) return cand;
  }
  return replan_stop(yielder, trajectories, p, pp);
}

}  // namespace

std::vector<Trajectory> resolve_all(std::span<const PlanContext> contexts,
                                    std::vector<Trajectory> trajectories,
                                    const SeparationParams& p, const PlannerParams& pp) {
  if (contexts.size() != trajectories.size())
    throw InvalidParameter("resolve_all: one context per trajectory required");
  std::unordered_map<CarId, std::size_t> index;
  for (std::size_t i = 0; i < trajectories.size(); ++i) index[trajectories[i].car_id] = i;
  std::vector<PlanContext> ctx(contexts.begin(), contexts.end());
  std::vector<std::set<std::size_t>> yields_to(ctx.size());
  auto note_winner = [&](std::size_t loser, const Conflict& c) {
    const std::size_t w = index.at(c.car_a) == loser ? index.at(c.car_b) : index.at(c.car_a);
    if (!ctx[w].path || !yields_to[loser].insert(w).second) return;
    ctx[loser].no_stop.push_back({ctx[w].path, ctx[w].fs.s, ctx[w].fs.s + kNoStopReach});
  };
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    if (!ctx[i].path || trajectories[i].empty()) continue;
    for (std::size_t j = 0; j < ctx.size(); ++j) {
      if (j == i || !ctx[j].path || trajectories[j].empty() ||
          !(ctx[j].priority < ctx[i].priority))
        continue;
      const double gap = distance(trajectories[i].frames.front().position(),
                                  trajectories[j].frames.front().position());
      if (gap > 2.0 * kNoStopReach || !yields_to[i].insert(j).second) continue;
      ctx[i].no_stop.push_back({ctx[j].path, ctx[j].fs.s, ctx[j].fs.s + kNoStopReach});
    }
  }

  auto yielder_of = [&](const Conflict& c) -> std::optional<std::size_t> {
    const std::size_t ia = index.at(c.car_a);
    const std::size_t ib = index.at(c.car_b);
    std::size_t loser;
    if (c.kind == ConflictKind::crossing && contexts[ia].priority != contexts[ib].priority) {
      loser = contexts[ia].priority < contexts[ib].priority ? ib : ia;
    } else {
      const CarId w = conflict_winner(c, trajectories[ia], trajectories[ib], p);
      loser = w == c.car_a ? ib : ia;
    }
    if (!contexts[loser].path) loser = loser == ia ? ib : ia;
    if (!contexts[loser].path) return std::nullopt;
    return loser;
  };
  auto by_time = [&](std::vector<Conflict>& cs) {
    std::sort(cs.begin(), cs.end(), [&](const Conflict& a, const Conflict& b) {
      const auto& ta = trajectories[index.at(a.car_a)];
      const auto& tb = trajectories[index.at(b.car_a)];
      const double ka = ta.start_time + static_cast<double>(a.frame_index) * ta.dt;
      const double kb = tb.start_time + static_cast<double>(b.frame_index) * tb.dt;
      if (std::abs(ka - kb) > 1e-9) return ka < kb;
      return std::tie(a.car_a, a.car_b) < std::tie(b.car_a, b.car_b);
    });
  };

  // Base plans that stall across a higher-priority car's path back off first.
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    if (ctx[i].no_stop.empty() || trajectories[i].empty()) continue;
    const Trajectory& t = trajectories[i];
    if (acceptable(t, nullptr, {}, p, &ctx[i])) continue;
    trajectories[i] = replan_candidates(ctx[i], trajectories, p, pp);
  }

  for (int round = 0; round < p.max_rounds; ++round) {
    auto conflicts = detect_all(trajectories, p);
    if (conflicts.empty()) return trajectories;
    by_time(conflicts);
    for (const auto& stale : conflicts) {
      // Earlier replans this round may already have cleared the pair.
      const std::size_t ia = index.at(stale.car_a);
      const std::size_t ib = index.at(stale.car_b);
      auto c = pair_conflict(trajectories[ia], trajectories[ib], p);
      if (!c) continue;
      auto loser = yielder_of(*c);
      if (!loser) continue;
      note_winner(*loser, *c);
      const Conflict one[] = {*c};
      trajectories[*loser] = replan(ctx[*loser], one, trajectories, p, pp);
    }
  }
  auto remaining = detect_all(trajectories, p);
  by_time(remaining);
  std::set<std::size_t> stopped;
  for (const auto& c : remaining) {
    auto loser = yielder_of(c);
    if (!loser || stopped.count(*loser)) continue;
    stopped.insert(*loser);
    note_winner(*loser, c);
    trajectories[*loser] = replan_stop(ctx[*loser], trajectories, p, pp);
  }
  return trajectories;
}

// ---------------------------------------------------------------------------
// FIFO

std::vector<FifoZone> fifo_zones(const RoadGraph& graph, double zone_radius) {
  if (!(zone_radius > 0.0)) throw InvalidParameter("fifo zone radius must be > 0");
  const auto& nodes = graph.nodes();
  std::vector<std::size_t> parent(nodes.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  auto is_box = [&](NodeId n) {
    const auto k = graph.node(n).kind;
    return k == NodeKind::intersection_entry || k == NodeKind::intersection_exit;
  };
  for (const auto& e : graph.edges())
    if (is_box(e.from) && is_box(e.to)) parent[find(e.from.value)] = find(e.to.value);

  std::vector<FifoZone> zones;
  std::map<std::size_t, std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (is_box(nodes[i].id)) clusters[find(i)].push_back(i);
  int k = 0;
  for (const auto& [root, members] : clusters) {
    Vec2 c{0.0, 0.0};
    for (auto m : members) c = c + nodes[m].position;
    c = c * (1.0 / static_cast<double>(members.size()));
    double extent = 0.0;
    for (auto m : members) extent = std::max(extent, distance(c, nodes[m].position));
    zones.push_back({"intersection_" + std::to_string(k++), c, extent + 0.1});
  }
  for (const auto& n : nodes)
    if (n.kind == NodeKind::merge) zones.push_back({"merge:" + n.name, n.position, zone_radius});
  return zones;
}

FifoGate::FifoGate(std::vector<FifoZone> zones, double check_margin)
    : zones_(std::move(zones)), state_(zones_.size()), check_margin_(check_margin) {
  if (!(check_margin >= 0.0)) throw InvalidParameter("fifo check margin must be >= 0");
}

std::vector<GateCommand> FifoGate::update(std::span<const FifoCar> cars, double now) {
  constexpr double kStep = 0.05;
  struct Relation {
    bool inside = false;
    std::optional<double> entry_s;  // first path s inside the disc within the check margin
  };
  std::vector<std::vector<Relation>> rel(zones_.size(), std::vector<Relation>(cars.size()));
  for (std::size_t z = 0; z < zones_.size(); ++z) {
    const auto& zone = zones_[z];
    for (std::size_t i = 0; i < cars.size(); ++i) {
      const auto& car = cars[i];
      Relation& r = rel[z][i];
      r.inside = distance(car.position, zone.center) <= zone.radius;
      if (r.inside) {
        r.entry_s = car.s;
        continue;
      }
      if (!car.path || car.path->empty()) continue;
      if (distance(car.position, zone.center) > zone.radius + check_margin_ + 1e-9) continue;
      const double end = std::min(car.path->total_length, car.s + check_margin_);
      for (double s = car.s; s <= end + 1e-12; s += kStep) {
        if (distance(car.path->pose_at(s).position, zone.center) <= zone.radius) {
          r.entry_s = s;
          break;
        }
      }
    }
  }

  std::vector<GateCommand> cmds(cars.size());
  for (std::size_t i = 0; i < cars.size(); ++i) cmds[i].car = cars[i].id;

  for (std::size_t z = 0; z < zones_.size(); ++z) {
    auto& st = state_[z];
    std::map<CarId, std::size_t> present;
    for (std::size_t i = 0; i < cars.size(); ++i)
      if (rel[z][i].inside || rel[z][i].entry_s) present[cars[i].id] = i;

    if (st.claimant && !present.count(*st.claimant)) st.claimant.reset();
    for (auto it = st.arrivals.begin(); it != st.arrivals.end();)
      it = present.count(it->first) ? std::next(it) : st.arrivals.erase(it);
    for (const auto& [id, i] : present) st.arrivals.emplace(id, now);
    if (!st.claimant && !st.arrivals.empty()) {
      auto head = std::min_element(st.arrivals.begin(), st.arrivals.end(),
                                   [](const auto& a, const auto& b) {
                                     if (a.second != b.second) return a.second < b.second;
                                     return a.first < b.first;
                                   });
      st.claimant = head->first;
    }
    for (const auto& [id, i] : present) {
      if (st.claimant && *st.claimant == id) continue;
      const double hold = rel[z][i].inside ? cars[i].s
                                           : std::max(cars[i].s, *rel[z][i].entry_s - 0.1);
      cmds[i].go = false;
      cmds[i].hold_s = cmds[i].hold_s ? std::min(*cmds[i].hold_s, hold) : hold;
    }
  }
  return cmds;
}

}  // namespace icat
