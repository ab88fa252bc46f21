#include "sinusseg/data/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "sinusseg/core/error.hpp"
#include "sinusseg/data/image_io.hpp"

namespace sinusseg::data {
namespace {

constexpr double kPi = std::numbers::pi;

struct Cavity {
  double cx, cy;      // centre, pixels
  double ax, ay;      // semi-axes, pixels
  double angle;       // radians
  double h3, p3;      // 3rd harmonic amplitude / phase
  double h5, p5;      // 5th harmonic
  double depth;       // intensity drop
};

// Normalised radial coordinate: <= 1 inside the perturbed boundary.
double radial(const Cavity& cav, double x, double y) {
  const double dx = x - cav.cx;
  const double dy = y - cav.cy;
  const double cs = std::cos(cav.angle), sn = std::sin(cav.angle);
  const double u = (dx * cs + dy * sn) / cav.ax;
  const double v = (-dx * sn + dy * cs) / cav.ay;
  const double rho = std::hypot(u, v);
  const double phi = std::atan2(v, u);
  const double boundary = 1.0 + cav.h3 * std::cos(3.0 * phi + cav.p3) + cav.h5 * std::cos(5.0 * phi + cav.p5);
  return rho / boundary;
}

Cavity draw_cavity(std::mt19937_64& rng, double size, double cx_lo, double cx_hi) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };
  Cavity c{};
  c.cx = range(cx_lo, cx_hi) * size;
  c.cy = range(0.36, 0.60) * size;
  c.ax = range(0.08, 0.135) * size;
  c.ay = range(0.07, 0.115) * size;
  c.angle = range(-0.5, 0.5);
  c.h3 = range(0.0, 0.08);
  c.p3 = range(0.0, 2.0 * kPi);
  c.h5 = range(0.0, 0.04);
  c.p5 = range(0.0, 2.0 * kPi);
  c.depth = range(0.22, 0.34);
  return c;
}

}  // namespace

std::string phantom_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "phantom_%05zu", index);
  return buf;
}

PhantomSample make_phantom(int size, std::uint64_t seed, std::size_t index) {
  if (size < 64) raise(ErrorKind::Argument, "phantom size must be at least 64");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };
  const double s = size;

  // Extents stay within 0.135 * 1.12 * size of each centre, which keeps the
  // two cavities apart across the midline and inside the frame.
  const Cavity left = draw_cavity(rng, s, 0.24, 0.32);
  const Cavity right = draw_cavity(rng, s, 0.68, 0.76);

  // Superimposed anatomy: two oriented low-frequency bands plus a vertical
  // brightness gradient.
  struct Band {
    double amp, freq, dir, phase;
  };
  Band bands[2];
  for (auto& b : bands) b = {range(0.04, 0.10), range(1.0, 3.0), range(0.0, kPi), range(0.0, 2.0 * kPi)};
  const double base = range(0.55, 0.68);
  const double gradient = range(-0.10, 0.10);
  const double noise_sigma = range(0.03, 0.05);
  std::normal_distribution<double> noise(0.0, 1.0);

  PhantomSample out{GrayImage(size, size), BinaryMask(size, size)};
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const double x = c + 0.5, y = r + 0.5;
      double value = base + gradient * (y / s - 0.5);
      for (const auto& b : bands) {
        const double t = (x * std::cos(b.dir) + y * std::sin(b.dir)) / s;
        value += b.amp * std::sin(2.0 * kPi * b.freq * t + b.phase);
      }
      bool inside = false;
      for (const Cavity* cav : {&left, &right}) {
        const double rho = radial(*cav, x, y);
        inside = inside || rho <= 1.0;
        // Soft edge about 1.5 px wide at the boundary.
        const double edge_px = (rho - 1.0) * std::min(cav->ax, cav->ay);
        const double weight = 1.0 / (1.0 + std::exp(edge_px / 0.75));
        value -= cav->depth * weight;
      }
      value += noise_sigma * noise(rng);
      out.image.at(r, c) = static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 1.0) * 255.0));
      out.mask.at(r, c) = inside ? 1 : 0;
    }
  }
  return out;
}

SplitManifest generate_phantom_dataset(std::size_t n, int size, std::uint64_t seed,
                                       const std::filesystem::path& out_dir) {
  if (n == 0) raise(ErrorKind::Argument, "phantom count must be at least 1");
  if (size < 64) raise(ErrorKind::Argument, "phantom size must be at least 64");
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (!ec) std::filesystem::create_directories(out_dir / "masks", ec);
  if (ec) raise(ErrorKind::Io, "cannot create " + out_dir.string() + ": " + ec.message());

  SplitManifest manifest;
  manifest.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    const auto sample = make_phantom(size, seed, i);
    SampleRecord rec;
    rec.image_id = phantom_id(i);
    rec.image_path = out_dir / "images" / (rec.image_id + ".png");
    rec.mask_path = out_dir / "masks" / (rec.image_id + ".png");
    rec.labeled = true;
    rec.split = Split::Train;
    save_gray_image(sample.image, rec.image_path);
    save_mask(sample.mask, *rec.mask_path);
    manifest.records.push_back(std::move(rec));
  }
  manifest.counts = SplitManifest::tally(manifest.records);
  return manifest;
}

}  // namespace sinusseg::data
