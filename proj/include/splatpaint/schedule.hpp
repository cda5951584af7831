// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "splatpaint/common.hpp"

namespace splatpaint {

/// Diffusion noise schedule. `alpha_bar[t]` is the cumulative product of
/// (1 - beta) up to timestep t, so alpha_bar[0] = 1 and the sequence decreases
/// strictly toward (but never reaching) zero.
struct NoiseSchedule {
    int timesteps = 0;
    std::vector<double> alpha_bar;

    void validate() const {
        if (timesteps < 1) throw ValidationError("noise schedule needs at least one timestep");
        if (alpha_bar.size() != static_cast<std::size_t>(timesteps) + 1)
            throw ValidationError("noise schedule must hold timesteps + 1 alpha_bar entries");
        if (alpha_bar[0] != 1.0) throw ValidationError("alpha_bar[0] must be 1");
        for (int t = 0; t <= timesteps; ++t) {
            const double a = alpha_bar[t];
            if (!(a > 0.0) || a > 1.0 || !std::isfinite(a))
                throw ValidationError("alpha_bar[" + std::to_string(t) + "] out of (0,1]");
            if (t > 0 && !(a < alpha_bar[t - 1]))
                throw ValidationError("alpha_bar must decrease strictly at t=" + std::to_string(t));
        }
    }

    double at(int t) const {
        if (t < 0 || t > timesteps)
            throw ValidationError("timestep " + std::to_string(t) + " outside schedule [0," +
                                  std::to_string(timesteps) + "]");
        return alpha_bar[t];
    }
};

/// Linear-beta schedule: beta ramps from 1e-4 to 0.02 over timesteps 1..T.
inline NoiseSchedule make_linear_schedule(int timesteps = 1000) {
    if (timesteps < 1) throw ValidationError("noise schedule needs at least one timestep");
    NoiseSchedule schedule;
    schedule.timesteps = timesteps;
    schedule.alpha_bar.resize(timesteps + 1);
    schedule.alpha_bar[0] = 1.0;
    const double beta_lo = 1e-4;
    const double beta_hi = 0.02;
    for (int t = 1; t <= timesteps; ++t) {
        const double frac = timesteps > 1 ? (t - 1.0) / (timesteps - 1.0) : 0.0;
        const double beta = beta_lo + frac * (beta_hi - beta_lo);
        schedule.alpha_bar[t] = schedule.alpha_bar[t - 1] * (1.0 - beta);
    }
    schedule.validate();
    return schedule;
}

/// Uniform sub-schedule for DDIM: tau_i = round(i * T / steps), i = 0..steps.
/// Strictly increasing as long as steps <= T.
inline std::vector<int> ddim_timesteps(const NoiseSchedule& schedule, int steps) {
    if (steps < 1) throw ValidationError("ddim needs at least one step");
    if (steps > schedule.timesteps)
        throw ValidationError("ddim steps (" + std::to_string(steps) + ") exceed schedule timesteps (" +
                              std::to_string(schedule.timesteps) + ")");
    std::vector<int> tau(steps + 1);
    for (int i = 0; i <= steps; ++i)
        tau[i] = static_cast<int>(std::lround(static_cast<double>(i) * schedule.timesteps / steps));
    return tau;
}

}  // namespace splatpaint
