#pragma once

#include <cstdint>

#include "beammap/diff/denoiser.hpp"

namespace beammap::diff {

// Full reverse process conditioned on each row of `cond`. Row i draws every
// noise vector from its own stream Rng::stream(seed, stream_offset + i) and
// all math is row-independent, so generating rows together or one at a time
// gives bit-identical output. Throws if the chain diverges (|g| > 1e6).
nn::Tensor generate(const Denoiser& dn, const nn::ParamStore& ps, const DiffusionSchedule& sched,
                    const nn::Tensor& cond, std::uint64_t seed, std::uint64_t stream_offset = 0);

// One reverse step g_t -> g_{t-1} for a single row. rng supplies the
// transition noise; it is not consumed at t == 1.
nn::Tensor reverse_step(const Denoiser& dn, const nn::ParamStore& ps, const DiffusionSchedule& sched,
                        const nn::Tensor& g_t, std::size_t t, const nn::Tensor& cond_row,
                        nn::Rng& rng);

}  // namespace beammap::diff
