#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ambidoa/parallel.hpp"
#include "ambidoa/spheregrid.hpp"

namespace ambidoa {

inline constexpr double kSpeedOfSound = 343.0;
inline constexpr double kWallMargin = 0.5;

// Walls are ordered x=0, x=Lx, y=0, y=Ly, z=0, z=Lz.
struct RoomConfig {
  Vec3 dims{4.0, 5.0, 3.0};
  std::array<double, 6> absorption{0.3, 0.3, 0.3, 0.3, 0.3, 0.3};
  double scattering = 0.0;
  double speed_of_sound = kSpeedOfSound;

  static RoomConfig uniform(const Vec3& dims, double absorption, double scattering = 0.0);

  double volume() const { return dims.prod(); }
  double surface_area() const;
  // Throws std::invalid_argument on any violated invariant.
  void validate() const;
};

struct Scene {
  RoomConfig room;
  Vec3 source = Vec3::Zero();
  Vec3 listener = Vec3::Zero();
  std::size_t room_index = 0;

  // Listener-centric direction toward the source.
  Direction source_direction() const { return to_spherical(source - listener); }
  void validate() const;
};

enum class PathKind { specular, diffuse };

struct AcousticPath {
  Vec3 direction = Vec3::UnitX();  // arrival direction, unit, listener-centric
  double delay = 0.0;              // seconds
  double amplitude = 0.0;          // linear pressure gain
  int order = 0;                   // reflection count
  PathKind kind = PathKind::specular;
};

struct SceneSampling {
  Vec3 dims_min{2.5, 2.5, 2.0};
  Vec3 dims_max{10.0, 10.0, 3.0};
  double absorption_min = 0.1;
  double absorption_max = 0.7;
  double scattering_min = 0.0;
  double scattering_max = 1.0;
  std::size_t pairs_per_room = 3;
};

// `count` scenes, `pairs_per_room` consecutive scenes per room. Throws
// std::invalid_argument when a room dimension cannot hold the 0.5 m margins.
std::vector<Scene> sample_scenes(std::size_t count, std::uint64_t seed,
                                 const SceneSampling& sampling = {});

// Specular image sources up to `max_order` total reflections.
std::vector<AcousticPath> image_source_paths(const Scene& scene, int max_order);

struct TraceParams {
  std::size_t n_rays = 20000;
  int max_bounces = 50;
  double receiver_radius = 0.25;
  std::uint64_t rng_seed = 1;
  // Paths arriving at or after this delay are dropped.
  double max_delay = 1.0;
  // A ray stops once its energy falls below this fraction of its start.
  double energy_floor = 1e-9;
};

// Stochastic specular + Lambertian path tracing. The direct path is added
// analytically; each diffuse bounce is connected straight to the listener
// ("diffuse rain"); rays whose last bounce was specular are detected by the
// receiver sphere and detections of the same image are merged. Results are
// identical for Exec::serial and Exec::parallel.
std::vector<AcousticPath> trace_paths(const Scene& scene, const TraceParams& params,
                                      Exec exec = Exec::parallel);

// Energy seen by a sphere of `receiver_radius` relative to the emitted
// energy, for the bound check (rain and direct use their point intensity).
double received_energy_fraction(std::span<const AcousticPath> paths, double receiver_radius);

// Schroeder backward integral of w^2 in dB, 0 dB at the first sample.
// Throws std::invalid_argument on an all-zero input.
std::vector<double> energy_decay_curve(std::span<const float> w);
std::vector<double> energy_decay_curve(std::span<const double> w);

// Line fit over the -5..-35 dB part of the EDC, extrapolated to 60 dB.
// Throws std::runtime_error if the EDC never reaches -35 dB.
double estimate_rt60(std::span<const double> edc_db, double sample_rate);

// 0.161 V / (sum_i alpha_i S_i). Throws if total absorption is zero.
double sabine_rt60(const RoomConfig& room);

}  // namespace ambidoa
