#include "saoithe/dynamics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "saoithe/whittle.hpp"

namespace saoithe {

PolicyDecision PolicyDecision::none(int n) {
  const auto sz = static_cast<std::size_t>(n);
  return {ActionVector(sz, 0), ActionVector(sz, 0), ActionVector(sz, 0)};
}

int PolicyDecision::activations() const {
  return static_cast<int>(std::count(a_dev.begin(), a_dev.end(), 1));
}

StepParams step_params(const ValidatedConfig& cfg, bool gate) {
  const SimConfig& c = cfg.raw();
  StepParams p;
  p.tx_slots = c.tx_duration_slots;
  p.fwd_slots = c.fwd_duration_slots;
  p.aoi_cap = c.aoi_cap;
  p.capacity = c.channel_capacity;
  p.e_tot = cfg.e_tot();
  p.stages = cfg.stage_energy();
  p.attribution = c.attribution;
  p.duty_per_tx = cfg.duty_per_tx();
  p.gate = gate;
  return p;
}

SystemState initial_state(int num_sources, int initial_aoi) {
  SystemState s;
  s.sources.assign(static_cast<std::size_t>(num_sources), SourceState{});
  for (auto& src : s.sources) {
    src.aoi = initial_aoi;
  }
  return s;
}

SystemState initial_state(const ValidatedConfig& cfg) {
  return initial_state(cfg.num_sources(), cfg.raw().initial_aoi);
}

std::vector<std::uint8_t> feasibility_mask(const SystemState& state) {
  std::vector<std::uint8_t> mask(state.sources.size());
  std::transform(state.sources.begin(), state.sources.end(), mask.begin(),
                 [](const SourceState& s) { return s.dev_busy ? 0 : 1; });
  return mask;
}

bool uplink_indicator(const SourceState& src) { return src.dev_busy && src.dev_timer == 1; }

void check_decision(const SystemState& state, const PolicyDecision& d, int capacity) {
  const auto n = state.sources.size();
  if (d.a_dev.size() != n || d.a_gw.size() != n || d.a_sv.size() != n) {
    throw ContractError("decision vectors must have one entry per source");
  }
  int active = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const SourceState& s = state.sources[i];
    if (d.a_dev[i] > 1 || d.a_gw[i] > 1 || d.a_sv[i] > 1) {
      throw ContractError("actions must be binary (source " + std::to_string(i) + ")");
    }
    if (d.a_dev[i]) {
      if (s.dev_busy) {
        throw ContractError("activation of busy device " + std::to_string(i));
      }
      ++active;
    }
    if (d.a_gw[i] && (s.gw_buf_age == 0 || s.gw_busy)) {
      throw ContractError("forwarding without an idle gateway and buffered packet (source " +
                          std::to_string(i) + ")");
    }
    if (d.a_sv[i] && s.sv_buf_age == 0) {
      throw ContractError("processing an empty server buffer (source " + std::to_string(i) + ")");
    }
  }
  if (active > capacity) {
    throw ContractError("decision activates " + std::to_string(active) +
                        " sources, channel capacity is " + std::to_string(capacity));
  }
}

void apply_greedy_downstream(const SystemState& state, PolicyDecision& d) {
  for (std::size_t i = 0; i < state.sources.size(); ++i) {
    const SourceState& s = state.sources[i];
    d.a_gw[i] = (s.gw_buf_age > 0 && !s.gw_busy) ? 1 : 0;
    d.a_sv[i] = s.sv_buf_age > 0 ? 1 : 0;
  }
}

StepOutcome step(const SystemState& state, const PolicyDecision& decision, double xi,
                 const BudgetLedger& ledger, const StepParams& p) {
  check_decision(state, decision, p.capacity);
  if (!(xi >= 0.0)) {
    throw std::domain_error("carbon intensity must be non-negative");
  }

  StepOutcome out{state, SlotMetrics{}, ledger};
  out.state.slot = state.slot + 1;
  SlotMetrics& m = out.metrics;
  BudgetLedger& led = out.ledger;

  const bool single = p.attribution == EnergyAttribution::single;
  const double cf_update = carbon_cost(xi, p.e_tot);
  const auto cap = [&p](int v) { return std::min(v, p.aoi_cap); };

  for (std::size_t i = 0; i < state.sources.size(); ++i) {
    const SourceState& cur = state.sources[i];
    SourceState& nxt = out.state.sources[i];
    const double aoi = cur.aoi;
    m.staleness_cost += aoi * aoi;
    m.aoi_sum += aoi;

    // Device stage. Activation is gated on the projected spend of a full update.
    bool dev_busy = cur.dev_busy;
    int dev_timer = cur.dev_timer;
    if (decision.a_dev[i]) {
      if (p.gate && !led.affords(cf_update, p.duty_per_tx)) {
        m.blocked_by_budget.push_back(static_cast<int>(i));
      } else {
        const double energy = single ? p.e_tot : p.stages.device;
        const double cf = single ? cf_update : carbon_cost(xi, energy);
        led.charge(cf, p.duty_per_tx);
        m.energy_spent += energy;
        m.cf_spent += cf;
        m.duty_spent += p.duty_per_tx;
        ++m.activations;
        dev_busy = true;
        dev_timer = p.tx_slots;
      }
    }
    const bool arrival = dev_busy && dev_timer == 1;
    if (arrival) {
      dev_busy = false;
      dev_timer = 0;
    } else if (dev_busy) {
      --dev_timer;
    }
    nxt.dev_busy = dev_busy;
    nxt.dev_timer = dev_timer;

    // Gateway stage.
    const bool forward = decision.a_gw[i] && cur.gw_buf_age > 0;
    bool gw_busy = cur.gw_busy;
    int gw_timer = cur.gw_timer;
    int fwd_age = cur.gw_fwd_age;
    if (forward) {
      gw_busy = true;
      gw_timer = p.fwd_slots;
      fwd_age = cur.gw_buf_age;
      if (!single) {
        const double cf = carbon_cost(xi, p.stages.gateway);
        led.charge(cf, 0.0);
        m.energy_spent += p.stages.gateway;
        m.cf_spent += cf;
      }
    }
    bool injected = false;
    int injected_age = 0;
    if (gw_busy && gw_timer == 1) {
      injected = true;
      injected_age = cap(fwd_age + 1);
      gw_busy = false;
      gw_timer = 0;
      fwd_age = 0;
    } else if (gw_busy) {
      --gw_timer;
      fwd_age = cap(fwd_age + 1);
    }
    nxt.gw_busy = gw_busy;
    nxt.gw_timer = gw_timer;
    nxt.gw_fwd_age = fwd_age;

    if (arrival) {
      // The packet has aged one slot per transmission slot on arrival.
      if (cur.gw_buf_age > 0 && !forward) ++m.dropped;
      nxt.gw_buf_age = cap(p.tx_slots);
    } else if (forward) {
      nxt.gw_buf_age = 0;
    } else if (cur.gw_buf_age > 0) {
      nxt.gw_buf_age = cap(cur.gw_buf_age + 1);
    } else {
      nxt.gw_buf_age = 0;
    }

    // Server stage.
    const bool delivered = decision.a_sv[i] && cur.sv_buf_age > 0;
    if (delivered) {
      ++m.deliveries;
      nxt.aoi = cap(cur.sv_buf_age + 1);
      if (!single) {
        const double cf = carbon_cost(xi, p.stages.server);
        led.charge(cf, 0.0);
        m.energy_spent += p.stages.server;
        m.cf_spent += cf;
      }
    } else {
      nxt.aoi = cap(cur.aoi + 1);
    }
    if (injected) {
      if (cur.sv_buf_age > 0 && !delivered) ++m.dropped;
      nxt.sv_buf_age = injected_age;
    } else if (delivered) {
      nxt.sv_buf_age = 0;
    } else if (cur.sv_buf_age > 0) {
      nxt.sv_buf_age = cap(cur.sv_buf_age + 1);
    } else {
      nxt.sv_buf_age = 0;
    }
  }
  return out;
}

double instantaneous_cost(const SystemState& state) {
  return std::accumulate(state.sources.begin(), state.sources.end(), 0.0,
                         [](double acc, const SourceState& s) {
                           const double a = s.aoi;
                           return acc + a * a;
                         });
}

double lagrangian_cost(const SystemState& state, const PolicyDecision& decision,
                       const IndexContext& ctx) {
  if (!(ctx.lambda >= 0.0) || !(ctx.mu >= 0.0)) {
    throw std::domain_error("multipliers must be non-negative");
  }
  if (decision.a_dev.size() != state.sources.size()) {
    throw ContractError("decision size does not match state");
  }
  const double per_activation = ctx.cost();
  const double active = std::count(decision.a_dev.begin(), decision.a_dev.end(), 1);
  return instantaneous_cost(state) + per_activation * active;
}

}  // namespace saoithe
