#include "fforge/synth.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <fstream>
#include <map>
#include <numbers>
#include <stdexcept>

#include "json.hpp"
#include "fforge/polygonize.hpp"

namespace fforge {

namespace fs = std::filesystem;
using nlohmann::json;

void SynthParams::validate() const {
  if (size < 16) throw std::invalid_argument("synth: size must be at least 16");
  if (min_vertices < 4 || max_vertices < min_vertices) throw std::invalid_argument("synth: invalid vertex range");
  if (max_rectangles < 1) throw std::invalid_argument("synth: max_rectangles must be positive");
  if (!(min_extent > 0 && min_extent <= max_extent && max_extent < 1)) {
    throw std::invalid_argument("synth: extents must satisfy 0 < min <= max < 1");
  }
  if (min_edge < 1) throw std::invalid_argument("synth: min_edge must be positive");
  if (!(blur_sigma_min > 0 && blur_sigma_max >= blur_sigma_min) || noise_cell < 1 || image_noise < 0) {
    throw std::invalid_argument("synth: invalid corruption parameters");
  }
}

namespace {

bool fg(const Mask& m, int r, int c) {
  return r >= 0 && c >= 0 && r < m.height() && c < m.width() && m(r, c) > 0.5f;
}

bool has_diagonal_touch(const Mask& m) {
  for (int r = -1; r < m.height(); ++r)
    for (int c = -1; c < m.width(); ++c) {
      const bool a = fg(m, r, c), b = fg(m, r, c + 1), d = fg(m, r + 1, c), e = fg(m, r + 1, c + 1);
      if ((a && e && !b && !d) || (b && d && !a && !e)) return true;
    }
  return false;
}

Point rotate(const Point& p, const Point& center, double cos_t, double sin_t) {
  const double dx = p.x - center.x, dy = p.y - center.y;
  return {center.x + cos_t * dx - sin_t * dy, center.y + sin_t * dx + cos_t * dy};
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) sum += k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& v : k) v /= sum;
  return k;
}

MaskArray blur(const MaskArray& src, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int h = static_cast<int>(src.rows()), w = static_cast<int>(src.cols());
  MaskArray tmp(h, w), out(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i) acc += k[static_cast<std::size_t>(i + radius)] * src(r, std::clamp(c + i, 0, w - 1));
      tmp(r, c) = static_cast<float>(acc);
    }
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i) acc += k[static_cast<std::size_t>(i + radius)] * tmp(std::clamp(r + i, 0, h - 1), c);
      out(r, c) = static_cast<float>(acc);
    }
  return out;
}

double shortest_edge(const Polygon& poly) {
  double best = std::numeric_limits<double>::infinity();
  auto scan = [&](const Ring& ring) {
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const Point& a = ring[i];
      const Point& b = ring[(i + 1) % ring.size()];
      best = std::min(best, std::hypot(b.x - a.x, b.y - a.y));
    }
  };
  scan(poly.outer);
  for (const Ring& r : poly.inner) scan(r);
  return best;
}

}  // namespace

std::vector<Ring> crack_boundaries(const Mask& mask) {
  if (has_diagonal_touch(mask)) throw std::invalid_argument("crack_boundaries: pixels touch only diagonally");
  const int h = mask.height(), w = mask.width();
  const int lw = w + 1;
  auto id = [lw](int i, int j) { return i * lw + j; };
  std::map<int, int> next;  // lattice point -> successor, fg on the right
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      if (!fg(mask, r, c)) continue;
      if (!fg(mask, r - 1, c)) next[id(r, c)] = id(r, c + 1);
      if (!fg(mask, r, c + 1)) next[id(r, c + 1)] = id(r + 1, c + 1);
      if (!fg(mask, r + 1, c)) next[id(r + 1, c + 1)] = id(r + 1, c);
      if (!fg(mask, r, c - 1)) next[id(r + 1, c)] = id(r, c);
    }
  std::vector<Ring> rings;
  while (!next.empty()) {
    const int start = next.begin()->first;
    std::vector<int> loop;
    for (int p = start;;) {
      loop.push_back(p);
      const auto it = next.find(p);
      const int q = it->second;
      next.erase(it);
      p = q;
      if (p == start) break;
    }
    Ring ring;
    const std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i) {
      const int a = loop[(i + n - 1) % n], b = loop[i], c = loop[(i + 1) % n];
      const int d1r = b / lw - a / lw, d1c = b % lw - a % lw;
      const int d2r = c / lw - b / lw, d2c = c % lw - b % lw;
      if (d1r != d2r || d1c != d2c) ring.push_back({b % lw - 0.5, b / lw - 0.5});
    }
    rings.push_back(std::move(ring));
  }
  return rings;
}

SynthShape random_shape(std::mt19937_64& rng, const SynthParams& params) {
  params.validate();
  const int s = params.size;
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, std::max(lo, hi))(rng); };
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int lo = std::max(3, static_cast<int>(std::lround(params.min_extent * s)));
  const int hi = std::max(lo, static_cast<int>(std::lround(params.max_extent * s)));
  const int margin = 2;
  // Aim for an even vertex count drawn uniformly from the allowed range, and
  // settle for any allowed count if that proves too hard.
  const int lo_v = (params.min_vertices + 1) / 2, hi_v = params.max_vertices / 2;
  const int target = 2 * uniform(lo_v, std::max(lo_v, hi_v));

  for (int attempt = 0; attempt < 2000; ++attempt) {
    Mask m(s, s);
    auto fill = [&](int r0, int c0, int hh, int ww, float v) {
      for (int r = r0; r < r0 + hh; ++r)
        for (int c = c0; c < c0 + ww; ++c) m(r, c) = v;
    };
    const int h0 = uniform(lo, hi), w0 = uniform(lo, hi);
    fill(uniform(margin, s - margin - h0), uniform(margin, s - margin - w0), h0, w0, 1.0f);
    const int rects = uniform(1, params.max_rectangles + (target > 8 ? 2 : 0));
    for (int k = 1; k < rects; ++k) {
      for (int tries = 0; tries < 20; ++tries) {
        const int hh = uniform(std::max(3, lo / 2), hi), ww = uniform(std::max(3, lo / 2), hi);
        const int r0 = uniform(margin, s - margin - hh), c0 = uniform(margin, s - margin - ww);
        int overlap = 0;
        for (int r = r0; r < r0 + hh; ++r)
          for (int c = c0; c < c0 + ww; ++c) overlap += m(r, c) > 0.5f;
        if (overlap > 0 && overlap < hh * ww) {
          fill(r0, c0, hh, ww, 1.0f);
          break;
        }
      }
    }
    int holes = 0;
    if (unit(rng) < params.hole_probability) {
      for (int tries = 0; tries < 20 && !holes; ++tries) {
        const int hh = uniform(params.min_edge, params.min_edge + 2), ww = uniform(params.min_edge, params.min_edge + 2);
        const int r0 = uniform(margin + 2, s - margin - 2 - hh), c0 = uniform(margin + 2, s - margin - 2 - ww);
        bool solid = true;
        for (int r = r0 - 2; r < r0 + hh + 2 && solid; ++r)
          for (int c = c0 - 2; c < c0 + ww + 2; ++c)
            if (!fg(m, r, c)) {
              solid = false;
              break;
            }
        if (solid) {
          fill(r0, c0, hh, ww, 0.0f);
          holes = 1;
        }
      }
    }
    if (has_diagonal_touch(m)) continue;
    Polygon poly;
    int outers = 0;
    for (Ring& ring : crack_boundaries(m)) {
      if (is_clockwise(ring)) {
        poly.outer = std::move(ring);
        ++outers;
      } else {
        poly.inner.push_back(std::move(ring));
      }
    }
    const int n = static_cast<int>(poly.outer.size());
    if (outers != 1 || n < params.min_vertices || n > params.max_vertices) continue;
    if (attempt < 1000 && n != target) continue;
    if (shortest_edge(poly) < params.min_edge) continue;
    poly.instance_id = 1;

    if (unit(rng) < params.rotation_probability) {
      const double theta = (2 * unit(rng) - 1) * params.max_rotation_deg * std::numbers::pi / 180.0;
      const double ct = std::cos(theta), st = std::sin(theta);
      const Point center{(s - 1) / 2.0, (s - 1) / 2.0};
      bool inside = true;
      auto turn = [&](Ring& ring) {
        for (Point& p : ring) {
          p = rotate(p, center, ct, st);
          if (p.x < 0.5 || p.y < 0.5 || p.x > s - 1.5 || p.y > s - 1.5) inside = false;
        }
      };
      turn(poly.outer);
      for (Ring& ring : poly.inner) turn(ring);
      if (!inside) continue;
      Mask ideal = rasterize_polygon(poly, s, s);
      if (connected_components(ideal).count != 1) continue;
      if (trace_rings(ideal).size() != 1 + poly.inner.size()) continue;
      return {std::move(poly), std::move(ideal)};
    }
    return {std::move(poly), std::move(m)};
  }
  throw std::runtime_error("synth: could not draw a shape with the requested vertex range");
}

Mask corrupt_mask(const Mask& ideal, std::mt19937_64& rng, const SynthParams& params) {
  const int h = ideal.height(), w = ideal.width();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double sigma = params.blur_sigma_min + unit(rng) * (params.blur_sigma_max - params.blur_sigma_min);
  MaskArray soft = blur(ideal.values(), sigma);

  const int gh = h / params.noise_cell + 2, gw = w / params.noise_cell + 2;
  Eigen::ArrayXXd grid(gh, gw);
  for (int i = 0; i < gh; ++i)
    for (int j = 0; j < gw; ++j) grid(i, j) = (2 * unit(rng) - 1) * params.noise_amplitude;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double gy = static_cast<double>(r) / params.noise_cell, gx = static_cast<double>(c) / params.noise_cell;
      const int i = static_cast<int>(gy), j = static_cast<int>(gx);
      const double ty = gy - i, tx = gx - j;
      const double n = (1 - ty) * ((1 - tx) * grid(i, j) + tx * grid(i, j + 1)) +
                       ty * ((1 - tx) * grid(i + 1, j) + tx * grid(i + 1, j + 1));
      soft(r, c) += static_cast<float>(n);
    }

  Mask out(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      bool v = soft(r, c) > 0.5f;
      if (unit(rng) < params.speckle_rate) v = !v;
      out(r, c) = v ? 1.0f : 0.0f;
    }
  if ((out.values() > 0.5f).count() == 0) return ideal;
  return out;
}

IntensityImage render_image(const Mask& ideal, std::mt19937_64& rng, const SynthParams& params) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, params.image_noise);
  Eigen::Vector3d bg, building;
  const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
  for (int ch = 0; ch < 3; ++ch) {
    bg(ch) = 0.3 + 0.3 * unit(rng);
    building(ch) = std::clamp(bg(ch) + sign * (0.25 + 0.15 * unit(rng)), 0.0, 1.0);
  }
  IntensityImage img(ideal.width(), ideal.height());
  for (int r = 0; r < ideal.height(); ++r)
    for (int c = 0; c < ideal.width(); ++c) {
      const Eigen::Vector3d& base = ideal(r, c) > 0.5f ? building : bg;
      for (int ch = 0; ch < 3; ++ch) img.pixel(r, c)(ch) = static_cast<float>(std::clamp(base(ch) + noise(rng), 0.0, 1.0));
    }
  return img;
}

std::vector<SynthItem> generate_synthetic(int count, std::uint64_t seed, const SynthParams& params) {
  params.validate();
  if (count < 0) throw std::invalid_argument("synth: count must be non-negative");
  std::mt19937_64 master(seed);
  std::vector<SynthItem> items;
  items.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    std::mt19937_64 rng(master());
    SynthShape shape = random_shape(rng, params);
    SynthItem item;
    char name[16];
    std::snprintf(name, sizeof name, "s%04d", i);
    item.name = name;
    item.seg = corrupt_mask(shape.ideal, rng, params);
    item.image = render_image(shape.ideal, rng, params);
    Ring all = shape.polygon.outer;
    for (const Ring& ring : shape.polygon.inner) all.insert(all.end(), ring.begin(), ring.end());
    item.corners = corner_target(shape.ideal, all);
    item.polygon = std::move(shape.polygon);
    item.ideal = std::move(shape.ideal);
    items.push_back(std::move(item));
  }
  return items;
}

namespace {

json ring_json(const Ring& ring) {
  json out = json::array();
  for (const Point& p : ring) out.push_back({p.x, p.y});
  return out;
}

Ring ring_from_json(const json& j) {
  Ring out;
  for (const auto& p : j) out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return out;
}

}  // namespace

void write_synthetic(const std::string& dir, const std::vector<SynthItem>& items, std::uint64_t seed,
                     const SynthParams& params) {
  const fs::path root(dir);
  for (const char* sub : {"image", "seg", "ideal", "corners"}) fs::create_directories(root / sub);
  json manifest;
  manifest["seed"] = seed;
  manifest["size"] = params.size;
  manifest["min_vertices"] = params.min_vertices;
  manifest["max_vertices"] = params.max_vertices;
  manifest["samples"] = json::array();
  for (const SynthItem& item : items) {
    const std::string file = item.name + ".png";
    save_image(item.image, (root / "image" / file).string());
    save_mask(item.seg, (root / "seg" / file).string());
    save_mask(item.ideal, (root / "ideal" / file).string());
    save_mask(item.corners, (root / "corners" / file).string());
    json entry;
    entry["name"] = item.name;
    entry["vertex_count"] = item.polygon.outer.size();
    entry["outer"] = ring_json(item.polygon.outer);
    entry["inner"] = json::array();
    for (const Ring& ring : item.polygon.inner) entry["inner"].push_back(ring_json(ring));
    manifest["samples"].push_back(std::move(entry));
  }
  std::ofstream out(root / "manifest.json");
  if (!out) throw std::runtime_error("synth: cannot write " + (root / "manifest.json").string());
  out << manifest.dump(1) << '\n';
}

std::vector<SynthItem> read_synthetic(const std::string& dir) {
  const fs::path root(dir);
  std::ifstream in(root / "manifest.json");
  if (!in) throw std::runtime_error("dataset: missing " + (root / "manifest.json").string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("dataset: malformed manifest: ") + e.what());
  }
  std::vector<SynthItem> items;
  for (const auto& entry : manifest.at("samples")) {
    SynthItem item;
    item.name = entry.at("name").get<std::string>();
    const std::string file = item.name + ".png";
    item.image = load_image((root / "image" / file).string());
    const Extent extent{item.image.width(), item.image.height()};
    item.seg = load_mask((root / "seg" / file).string(), extent);
    item.ideal = load_mask((root / "ideal" / file).string(), extent);
    item.corners = load_mask((root / "corners" / file).string(), extent);
    item.polygon.outer = ring_from_json(entry.at("outer"));
    for (const auto& ring : entry.at("inner")) item.polygon.inner.push_back(ring_from_json(ring));
    item.polygon.instance_id = 1;
    items.push_back(std::move(item));
  }
  return items;
}

Dataset to_training_set(const std::vector<SynthItem>& items) {
  Dataset out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back({item.name, item.image, item.seg, item.ideal});
  return out;
}

std::vector<CornerSample> to_corner_set(const std::vector<SynthItem>& items) {
  std::vector<CornerSample> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back({item.ideal, item.corners});
  return out;
}

}  // namespace fforge
