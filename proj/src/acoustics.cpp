#include "ambidoa/acoustics.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace ambidoa {

RoomConfig RoomConfig::uniform(const Vec3& dims, double absorption, double scattering) {
  RoomConfig r;
  r.dims = dims;
  r.absorption.fill(absorption);
  r.scattering = scattering;
  return r;
}

double RoomConfig::surface_area() const {
  return 2.0 * (dims.x() * dims.y() + dims.y() * dims.z() + dims.x() * dims.z());
}

void RoomConfig::validate() const {
  for (int i = 0; i < 3; ++i) {
    if (!(dims[i] > 0.0)) throw std::invalid_argument("RoomConfig: dimensions must be > 0");
  }
  for (double a : absorption) {
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("RoomConfig: absorption outside [0,1]");
  }
  if (!(scattering >= 0.0 && scattering <= 1.0)) {
    throw std::invalid_argument("RoomConfig: scattering outside [0,1]");
  }
  if (!(speed_of_sound > 0.0)) throw std::invalid_argument("RoomConfig: speed of sound must be > 0");
}

namespace {

bool inside_with_margin(const Vec3& p, const Vec3& dims, double margin) {
  for (int i = 0; i < 3; ++i) {
    if (p[i] < margin - 1e-12 || p[i] > dims[i] - margin + 1e-12) return false;
  }
  return true;
}

}  // namespace

void Scene::validate() const {
  room.validate();
  if (!inside_with_margin(source, room.dims, kWallMargin)) {
    throw std::invalid_argument("Scene: source closer than 0.5 m to a wall");
  }
  if (!inside_with_margin(listener, room.dims, kWallMargin)) {
    throw std::invalid_argument("Scene: listener closer than 0.5 m to a wall");
  }
  if ((source - listener).norm() == 0.0) throw std::invalid_argument("Scene: source == listener");
}

std::vector<Scene> sample_scenes(std::size_t count, std::uint64_t seed,
                                 const SceneSampling& sampling) {
  if (count == 0) throw std::invalid_argument("sample_scenes: count must be >= 1");
  if (sampling.pairs_per_room == 0) throw std::invalid_argument("sample_scenes: pairs_per_room must be >= 1");
  for (int i = 0; i < 3; ++i) {
    if (sampling.dims_min[i] > sampling.dims_max[i]) {
      throw std::invalid_argument("sample_scenes: dims_min exceeds dims_max");
    }
    if (sampling.dims_min[i] <= 2.0 * kWallMargin) {
      throw std::invalid_argument(
          "sample_scenes: rejected configuration, a room dimension <= 1 m cannot hold the "
          "0.5 m wall margins");
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto lerp = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  std::vector<Scene> scenes;
  scenes.reserve(count);
  std::size_t room_index = 0;
  while (scenes.size() < count) {
    RoomConfig room;
    for (int i = 0; i < 3; ++i) room.dims[i] = lerp(sampling.dims_min[i], sampling.dims_max[i]);
    room.absorption.fill(lerp(sampling.absorption_min, sampling.absorption_max));
    room.scattering = lerp(sampling.scattering_min, sampling.scattering_max);
    for (std::size_t p = 0; p < sampling.pairs_per_room && scenes.size() < count; ++p) {
      Scene s;
      s.room = room;
      s.room_index = room_index;
      do {
        for (int i = 0; i < 3; ++i) {
          s.source[i] = lerp(kWallMargin, room.dims[i] - kWallMargin);
          s.listener[i] = lerp(kWallMargin, room.dims[i] - kWallMargin);
        }
      } while ((s.source - s.listener).norm() < 1e-6);
      scenes.push_back(s);
    }
    ++room_index;
  }
  return scenes;
}

std::vector<AcousticPath> image_source_paths(const Scene& scene, int max_order) {
  scene.validate();
  if (max_order < 0) throw std::invalid_argument("image_source_paths: max_order must be >= 0");
  const RoomConfig& room = scene.room;
  const double c = room.speed_of_sound;
  std::array<double, 6> beta{};
  for (int w = 0; w < 6; ++w) beta[w] = std::sqrt(1.0 - room.absorption[w]);

  std::vector<AcousticPath> paths;
  const int nmax = max_order / 2 + 1;
  for (int px = 0; px <= 1; ++px)
    for (int py = 0; py <= 1; ++py)
      for (int pz = 0; pz <= 1; ++pz)
        for (int nx = -nmax; nx <= nmax; ++nx)
          for (int ny = -nmax; ny <= nmax; ++ny)
            for (int nz = -nmax; nz <= nmax; ++nz) {
              const std::array<int, 3> p{px, py, pz};
              const std::array<int, 3> n{nx, ny, nz};
              int order = 0;
              double gain = 1.0;
              Vec3 image;
              for (int a = 0; a < 3; ++a) {
                const int low = std::abs(n[a] - p[a]);  // hits on the wall at 0
                const int high = std::abs(n[a]);        // hits on the wall at L
                order += low + high;
                gain *= std::pow(beta[2 * a], low) * std::pow(beta[2 * a + 1], high);
                image[a] = (1 - 2 * p[a]) * scene.source[a] + 2.0 * n[a] * room.dims[a];
              }
              if (order > max_order) continue;
              const Vec3 rel = image - scene.listener;
              const double dist = rel.norm();
              AcousticPath path;
              path.direction = rel / dist;
              path.delay = dist / c;
              path.amplitude = gain / dist;
              path.order = order;
              path.kind = PathKind::specular;
              paths.push_back(path);
            }
  std::stable_sort(paths.begin(), paths.end(),
                   [](const AcousticPath& a, const AcousticPath& b) { return a.delay < b.delay; });
  return paths;
}

namespace {

// One detection or rain contribution produced while following a ray.
struct RayHit {
  AcousticPath path;
  bool mergeable = false;  // pure specular chain; key identifies the image
  std::array<double, 3> key{};
  double energy = 0.0;
};

Vec3 wall_normal(int wall) {
  Vec3 n = Vec3::Zero();
  n[wall / 2] = (wall % 2 == 0) ? 1.0 : -1.0;  // pointing into the room
  return n;
}

// Cosine-weighted hemisphere sample around `normal`.
Vec3 lambertian(const Vec3& normal, double u1, double u2) {
  const double r = std::sqrt(u1);
  const double phi = 2.0 * kPi * u2;
  const double x = r * std::cos(phi);
  const double y = r * std::sin(phi);
  const double z = std::sqrt(std::max(0.0, 1.0 - u1));
  const Vec3 helper = std::abs(normal.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 t = normal.cross(helper).normalized();
  const Vec3 b = normal.cross(t);
  return (x * t + y * b + z * normal).normalized();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void trace_one_ray(const Scene& scene, const TraceParams& params, std::size_t ray,
                   std::vector<RayHit>& out) {
  const RoomConfig& room = scene.room;
  const double c = room.speed_of_sound;
  const double radius = params.receiver_radius;
  const double r2 = radius * radius;
  const double n_rays = static_cast<double>(params.n_rays);

  std::mt19937_64 rng(splitmix64(params.rng_seed ^ splitmix64(ray)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Uniform emission direction.
  const double cz = 1.0 - 2.0 * unit(rng);
  const double az = 2.0 * kPi * unit(rng);
  const double sz = std::sqrt(std::max(0.0, 1.0 - cz * cz));
  Vec3 dir(sz * std::cos(az), sz * std::sin(az), cz);
  Vec3 origin = scene.source;

  // Energy in units where an isotropic unit source gives intensity 1/r^2.
  const double e0 = 4.0 * kPi / n_rays;
  double energy = e0;
  double traveled = 0.0;
  bool specular_chain = true;       // every bounce so far specular
  bool last_specular = true;        // last bounce specular (leg 0: source)
  Vec3 virtual_source = scene.source;  // source of the current straight leg, unfolded
  double virtual_offset = 0.0;      // path length before virtual_source

  for (int bounce = 0; bounce <= params.max_bounces; ++bounce) {
    // Distance to the next wall.
    double t_hit = std::numeric_limits<double>::infinity();
    int wall = -1;
    for (int a = 0; a < 3; ++a) {
      if (dir[a] > 0.0) {
        const double t = (room.dims[a] - origin[a]) / dir[a];
        if (t < t_hit) { t_hit = t; wall = 2 * a + 1; }
      } else if (dir[a] < 0.0) {
        const double t = -origin[a] / dir[a];
        if (t < t_hit) { t_hit = t; wall = 2 * a; }
      }
    }
    t_hit = std::max(t_hit, 0.0);

    // Receiver detection on this leg; the first leg is the analytic direct path,
    // and a leg leaving a diffuse bounce is already covered by its rain term.
    if (bounce > 0 && last_specular) {
      const Vec3 to_listener = scene.listener - origin;
      const double t_c = to_listener.dot(dir);
      if (t_c > 0.0 && t_c < t_hit) {
        const double b2 = std::max(0.0, to_listener.squaredNorm() - t_c * t_c);
        if (b2 <= r2) {
          const Vec3 rel = virtual_source - scene.listener;
          const double dist = rel.norm();
          RayHit hit;
          hit.energy = energy / (kPi * r2);
          hit.path.direction = rel / dist;
          hit.path.delay = (virtual_offset + dist) / c;
          hit.path.order = bounce;
          hit.path.kind = specular_chain ? PathKind::specular : PathKind::diffuse;
          hit.mergeable = specular_chain;
          hit.key = {virtual_source.x(), virtual_source.y(), virtual_source.z()};
          out.push_back(hit);
        }
      }
    }

    if (bounce == params.max_bounces) break;
    traveled += t_hit;
    const Vec3 hit_point = origin + t_hit * dir;
    const Vec3 normal = wall_normal(wall);
    const double alpha = room.absorption[wall];
    const double surviving = energy * (1.0 - alpha);

    // Draws are consumed identically for every absorption value.
    const double u_choice = unit(rng);
    const double u1 = unit(rng);
    const double u2 = unit(rng);

    // Diffuse rain: Lambertian radiance of the scattered part, seen from the listener.
    if (room.scattering > 0.0 && surviving > 0.0) {
      const Vec3 to_listener = scene.listener - hit_point;
      const double d = to_listener.norm();
      const double cos_out = normal.dot(to_listener) / d;
      if (cos_out > 0.0) {
        RayHit hit;
        hit.energy = surviving * room.scattering * cos_out / (kPi * d * d);
        hit.path.direction = (hit_point - scene.listener) / d;
        hit.path.delay = (traveled + d) / c;
        hit.path.order = bounce + 1;
        hit.path.kind = PathKind::diffuse;
        out.push_back(hit);
      }
    }

    energy = surviving;
    if (!(energy > params.energy_floor * e0)) break;

    if (u_choice < room.scattering) {
      dir = lambertian(normal, u1, u2);
      specular_chain = false;
      last_specular = false;
      virtual_source = hit_point;
      virtual_offset = traveled;
    } else {
      dir[wall / 2] = -dir[wall / 2];
      const double plane = (wall % 2 == 0) ? 0.0 : room.dims[wall / 2];
      virtual_source[wall / 2] = 2.0 * plane - virtual_source[wall / 2];
      last_specular = true;
    }
    origin = hit_point;
    // Keep the origin on the wall plane exactly.
    origin[wall / 2] = (wall % 2 == 0) ? 0.0 : room.dims[wall / 2];
  }
}

}  // namespace

std::vector<AcousticPath> trace_paths(const Scene& scene, const TraceParams& params, Exec exec) {
  scene.validate();
  if (params.n_rays < 1) throw std::invalid_argument("trace_paths: n_rays must be >= 1");
  if (params.max_bounces < 0) throw std::invalid_argument("trace_paths: max_bounces must be >= 0");
  const double min_dim = scene.room.dims.minCoeff();
  if (!(params.receiver_radius > 0.0 && params.receiver_radius < min_dim / 4.0)) {
    throw std::invalid_argument("trace_paths: receiver radius must be in (0, min room dim / 4)");
  }
  const double direct_dist = (scene.source - scene.listener).norm();
  if (direct_dist <= params.receiver_radius) {
    throw std::invalid_argument("trace_paths: degenerate geometry, source inside the receiver sphere");
  }

  // Fixed chunking so the concatenation order does not depend on threads.
  constexpr std::size_t kChunk = 256;
  const std::size_t n_chunks = (params.n_rays + kChunk - 1) / kChunk;
  std::vector<std::vector<RayHit>> chunks(n_chunks);
  auto run_chunk = [&](std::size_t ci) {
    const std::size_t begin = ci * kChunk;
    const std::size_t end = std::min(params.n_rays, begin + kChunk);
    for (std::size_t r = begin; r < end; ++r) trace_one_ray(scene, params, r, chunks[ci]);
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(n_chunks); ++ci) {
      run_chunk(static_cast<std::size_t>(ci));
    }
  } else {
    for (std::size_t ci = 0; ci < n_chunks; ++ci) run_chunk(ci);
  }

  std::vector<AcousticPath> paths;
  AcousticPath direct;
  direct.direction = (scene.source - scene.listener) / direct_dist;
  direct.delay = direct_dist / scene.room.speed_of_sound;
  direct.amplitude = 1.0 / direct_dist;
  direct.order = 0;
  direct.kind = PathKind::specular;
  if (direct.delay < params.max_delay) paths.push_back(direct);

  // Detections of one image source are a single arrival; energies add.
  std::map<std::tuple<double, double, double, int>, std::size_t> image_slot;
  std::vector<double> energies;
  std::vector<AcousticPath> merged;
  for (const auto& chunk : chunks) {
    for (const RayHit& hit : chunk) {
      if (!(hit.path.delay < params.max_delay) || !(hit.energy > 0.0)) continue;
      if (hit.mergeable) {
        auto key = std::make_tuple(hit.key[0], hit.key[1], hit.key[2], hit.path.order);
        auto [it, inserted] = image_slot.emplace(key, merged.size());
        if (inserted) {
          merged.push_back(hit.path);
          energies.push_back(hit.energy);
        } else {
          energies[it->second] += hit.energy;
        }
      } else {
        merged.push_back(hit.path);
        energies.push_back(hit.energy);
      }
    }
  }
  for (std::size_t i = 0; i < merged.size(); ++i) {
    merged[i].amplitude = std::sqrt(energies[i]);
    paths.push_back(merged[i]);
  }
  std::stable_sort(paths.begin(), paths.end(),
                   [](const AcousticPath& a, const AcousticPath& b) { return a.delay < b.delay; });
  return paths;
}

double received_energy_fraction(std::span<const AcousticPath> paths, double receiver_radius) {
  double sum = 0.0;
  for (const auto& p : paths) sum += p.amplitude * p.amplitude;
  return sum * receiver_radius * receiver_radius / 4.0;
}

namespace {

template <typename T>
std::vector<double> schroeder(std::span<const T> w) {
  std::vector<double> edc(w.size());
  double acc = 0.0;
  for (std::size_t i = w.size(); i-- > 0;) {
    const double v = static_cast<double>(w[i]);
    acc += v * v;
    edc[i] = acc;
  }
  if (w.empty() || !(edc[0] > 0.0)) {
    throw std::invalid_argument("energy_decay_curve: impulse response is silent");
  }
  const double total = edc[0];
  for (double& e : edc) {
    e = e > 0.0 ? 10.0 * std::log10(e / total) : -std::numeric_limits<double>::infinity();
  }
  return edc;
}

}  // namespace

std::vector<double> energy_decay_curve(std::span<const float> w) { return schroeder(w); }
std::vector<double> energy_decay_curve(std::span<const double> w) { return schroeder(w); }

double estimate_rt60(std::span<const double> edc_db, double sample_rate) {
  if (!(sample_rate > 0.0)) throw std::invalid_argument("estimate_rt60: sample rate must be > 0");
  std::size_t start = edc_db.size();
  std::size_t stop = edc_db.size();
  for (std::size_t i = 0; i < edc_db.size(); ++i) {
    if (start == edc_db.size() && edc_db[i] <= -5.0) start = i;
    if (edc_db[i] <= -35.0) {
      stop = i;
      break;
    }
  }
  if (stop == edc_db.size() || stop <= start + 1) {
    throw std::runtime_error("estimate_rt60: decay range insufficient (EDC never reaches -35 dB)");
  }
  // Least-squares line through (t, dB).
  double st = 0, sy = 0, stt = 0, sty = 0;
  const double n = static_cast<double>(stop - start + 1);
  for (std::size_t i = start; i <= stop; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    st += t;
    sy += edc_db[i];
    stt += t * t;
    sty += t * edc_db[i];
  }
  const double slope = (n * sty - st * sy) / (n * stt - st * st);
  if (!(slope < 0.0)) throw std::runtime_error("estimate_rt60: non-decaying EDC segment");
  return -60.0 / slope;
}

double sabine_rt60(const RoomConfig& room) {
  room.validate();
  const Vec3& d = room.dims;
  const std::array<double, 6> area{d.y() * d.z(), d.y() * d.z(), d.x() * d.z(),
                                   d.x() * d.z(), d.x() * d.y(), d.x() * d.y()};
  double absorption_area = 0.0;
  for (int w = 0; w < 6; ++w) absorption_area += room.absorption[w] * area[w];
  if (!(absorption_area > 0.0)) throw std::invalid_argument("sabine_rt60: absorption must be > 0");
  return 0.161 * room.volume() / absorption_area;
}

}  // namespace ambidoa
