#pragma once

#include <cstdint>
#include <functional>

#include "wcad/schedule.hpp"
#include "wcad/tensor.hpp"

namespace wcad {

// Noise predictor: (x_t, t) -> estimated noise of the same shape. Any
// conditioning is bound into the closure.
using DenoiserFn = std::function<Tensor(const Tensor& x_t, int t)>;

// Mean squared error between injected noise and the model's estimate;
// differentiable into the model parameters through the closure.
Tensor training_loss(const DenoiserFn& model, const Tensor& x0, int t, const Tensor& eta,
                     const NoiseSchedule& sched);

// Deterministic DDIM over an evenly strided descending timestep subsequence
// (stride floor(T/steps), last update jumps to t=0). The start point x_T is
// standard normal, one independent stream per batch element (seed + index).
Tensor ddim_sample(const DenoiserFn& model, const NoiseSchedule& sched, int steps,
                   const Shape& shape, uint64_t seed);

// Ancestral DDPM with per-step Gaussian noise of variance beta_t; the final
// step adds no noise.
Tensor ddpm_sample(const DenoiserFn& model, const NoiseSchedule& sched, const Shape& shape,
                   uint64_t seed);

// Seeded standard-normal start tensor, one stream per batch element.
Tensor sample_start_noise(const Shape& shape, uint64_t seed);

// DDPM per-step noise streams are seeded seed + offset + batch index so they
// never collide with the start-noise streams.
constexpr uint64_t kDdpmNoiseStreamOffset = 0x9E3779B97F4A7C15ULL;

}  // namespace wcad
