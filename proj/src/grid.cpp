#include "fraccv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fraccv {

std::string to_string(GridKind kind) {
  return kind == GridKind::PeriodicCell ? "periodic-cell" : "truncated-box";
}

std::string to_string(DecayClass decay) {
  switch (decay) {
    case DecayClass::CompactSupport: return "compact-support";
    case DecayClass::SchwartzLike: return "schwartz-like";
    case DecayClass::Unknown: return "unknown";
  }
  return "unknown";
}

GridKind grid_kind_from_string(const std::string& s) {
  if (s == "periodic-cell" || s == "periodic") return GridKind::PeriodicCell;
  if (s == "truncated-box" || s == "truncated" || s == "box") return GridKind::TruncatedBox;
  throw Error("unknown grid kind '" + s + "' (expected periodic-cell or truncated-box)");
}

DecayClass decay_class_from_string(const std::string& s) {
  if (s == "compact-support") return DecayClass::CompactSupport;
  if (s == "schwartz-like") return DecayClass::SchwartzLike;
  if (s == "unknown") return DecayClass::Unknown;
  throw Error("unknown decay class '" + s + "'");
}

std::size_t GridSpec::num_points() const {
  std::size_t n = 1;
  for (int d = 0; d < dim; ++d) n *= static_cast<std::size_t>(points_per_axis);
  return n;
}

double GridSpec::cell_volume() const { return std::pow(spacing, dim); }

std::array<int, 3> GridSpec::multi_index(std::size_t flat) const {
  std::array<int, 3> idx{0, 0, 0};
  const auto n = static_cast<std::size_t>(points_per_axis);
  for (int d = dim - 1; d >= 0; --d) {
    idx[d] = static_cast<int>(flat % n);
    flat /= n;
  }
  return idx;
}

std::size_t GridSpec::flat_index(std::span<const int> idx) const {
  std::size_t flat = 0;
  for (int d = 0; d < dim; ++d) flat = flat * points_per_axis + static_cast<std::size_t>(idx[d]);
  return flat;
}

std::array<double, 3> GridSpec::point(std::size_t flat) const {
  auto idx = multi_index(flat);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int d = 0; d < dim; ++d) x[d] = coordinate(idx[d]);
  return x;
}

std::size_t GridSpec::nearest_node(std::span<const double> x) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int d = 0; d < dim; ++d) {
    long i = std::lround((x[d] - origin()) / spacing);
    if (kind == GridKind::PeriodicCell) {
      i %= points_per_axis;
      if (i < 0) i += points_per_axis;
    } else {
      i = std::clamp<long>(i, 0, points_per_axis - 1);
    }
    idx[d] = static_cast<int>(i);
  }
  return flat_index(idx);
}

GridSpec make_grid(GridSpec spec) {
  if (spec.dim < 1 || spec.dim > 3) throw Error("grid dimension must be 1, 2 or 3");
  if (spec.points_per_axis < 4 || spec.points_per_axis % 2 != 0)
    throw Error("N must be even and >= 4");
  if (spec.kind == GridKind::TruncatedBox) {
    if (!(spec.half_extent > 0.0) || !std::isfinite(spec.half_extent))
      throw Error("half extent L must be positive");
  } else {
    spec.half_extent = 0.5;
  }
  spec.spacing = spec.cell_length() / spec.points_per_axis;
  return spec;
}

GridSpec periodic_grid(int dim, int n) {
  return make_grid(GridSpec{dim, GridKind::PeriodicCell, 0.0, n, 0.0});
}

GridSpec box_grid(int dim, double half_extent, int n) {
  return make_grid(GridSpec{dim, GridKind::TruncatedBox, half_extent, n, 0.0});
}

SampledField::SampledField(GridSpec grid, int components, DecayClass decay)
    : grid_(grid), components_(components), decay_(decay) {
  if (components < 1) throw Error("a field needs at least one component");
  values_.assign(grid_.num_points() * static_cast<std::size_t>(components), 0.0);
}

SampledField::SampledField(GridSpec grid, int components, std::vector<double> values,
                           DecayClass decay)
    : grid_(grid), components_(components), values_(std::move(values)), decay_(decay) {
  if (components < 1) throw Error("a field needs at least one component");
  if (values_.size() != grid_.num_points() * static_cast<std::size_t>(components))
    throw Error("value array does not match grid size times component count");
}

SampledField SampledField::from_function(const GridSpec& grid, int components, const PointFn& fn,
                                         DecayClass decay) {
  SampledField f(grid, components, decay);
  for (std::size_t i = 0; i < grid.num_points(); ++i) {
    auto x = grid.point(i);
    fn(std::span<const double>(x.data(), grid.dim),
       std::span<double>(f.values_.data() + i * components, components));
  }
  return f;
}

SampledField SampledField::scalar(const GridSpec& grid, const ScalarFn& fn, DecayClass decay) {
  SampledField f(grid, 1, decay);
  for (std::size_t i = 0; i < grid.num_points(); ++i) {
    auto x = grid.point(i);
    f.values_[i] = fn(std::span<const double>(x.data(), grid.dim));
  }
  return f;
}

SampledField SampledField::component(int c) const {
  if (c < 0 || c >= components_) throw Error("component index out of range");
  SampledField out(grid_, 1, decay_);
  for (std::size_t i = 0; i < num_points(); ++i) out.values_[i] = (*this)(i, c);
  return out;
}

void SampledField::set_component(int c, const SampledField& scalar_field) {
  if (c < 0 || c >= components_) throw Error("component index out of range");
  if (scalar_field.components() != 1 || !(scalar_field.grid() == grid_))
    throw Error("set_component expects a scalar field on the same grid");
  for (std::size_t i = 0; i < num_points(); ++i) (*this)(i, c) = scalar_field(i);
}

void SampledField::validate_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) throw Error("field contains non-finite values");
}

bool SampledField::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

Mask Mask::from_predicate(const GridSpec& grid,
                          const std::function<bool(std::span<const double>)>& pred) {
  Mask m{grid, std::vector<std::uint8_t>(grid.num_points(), 0)};
  for (std::size_t i = 0; i < grid.num_points(); ++i) {
    auto x = grid.point(i);
    m.inside[i] = pred(std::span<const double>(x.data(), grid.dim)) ? 1 : 0;
  }
  return m;
}

Mask Mask::full(const GridSpec& grid) {
  return Mask{grid, std::vector<std::uint8_t>(grid.num_points(), 1)};
}

Mask Mask::complement() const {
  Mask m = *this;
  for (auto& v : m.inside) v = v ? 0 : 1;
  return m;
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(inside.begin(), inside.end(), 1));
}

void require_compatible(const SampledField& a, const SampledField& b, const char* what) {
  if (!(a.grid() == b.grid()) || a.components() != b.components()) {
    std::ostringstream os;
    os << what << ": fields live on different grids or have different component counts";
    throw Error(os.str());
  }
}

namespace {
DecayClass combine(DecayClass a, DecayClass b) {
  if (a == DecayClass::Unknown || b == DecayClass::Unknown) return DecayClass::Unknown;
  if (a == DecayClass::SchwartzLike || b == DecayClass::SchwartzLike) return DecayClass::SchwartzLike;
  return DecayClass::CompactSupport;
}
}  // namespace

SampledField operator+(const SampledField& a, const SampledField& b) {
  require_compatible(a, b, "operator+");
  SampledField out(a.grid(), a.components(), combine(a.decay(), b.decay()));
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a.values()[i] + b.values()[i];
  return out;
}

SampledField operator-(const SampledField& a, const SampledField& b) {
  require_compatible(a, b, "operator-");
  SampledField out(a.grid(), a.components(), combine(a.decay(), b.decay()));
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a.values()[i] - b.values()[i];
  return out;
}

SampledField operator*(double s, const SampledField& a) {
  SampledField out = a;
  for (double& v : out.values()) v *= s;
  return out;
}

SampledField multiply(const SampledField& scalar, const SampledField& a) {
  if (scalar.components() != 1 || !(scalar.grid() == a.grid()))
    throw Error("multiply expects a scalar field on the same grid");
  DecayClass d = a.decay();
  if (scalar.decay() != DecayClass::Unknown && d == DecayClass::Unknown) d = scalar.decay();
  else if (scalar.decay() == DecayClass::CompactSupport) d = DecayClass::CompactSupport;
  SampledField out(a.grid(), a.components(), d);
  for (std::size_t i = 0; i < a.num_points(); ++i)
    for (int c = 0; c < a.components(); ++c) out(i, c) = scalar(i) * a(i, c);
  return out;
}

double lp_norm(const SampledField& u, double p, const Mask* region) {
  if (!(p >= 1.0)) throw Error("lp_norm requires p >= 1");
  const int m = u.components();
  const bool inf = std::isinf(p);
  double acc = 0.0;
  for (std::size_t i = 0; i < u.num_points(); ++i) {
    if (region && !region->contains(i)) continue;
    double s = 0.0;
    for (int c = 0; c < m; ++c) s += u(i, c) * u(i, c);
    const double mag = std::sqrt(s);
    if (inf) acc = std::max(acc, mag);
    else if (mag > 0.0) acc += std::pow(mag, p);
  }
  if (inf) return acc;
  return std::pow(acc * u.grid().cell_volume(), 1.0 / p);
}

double inner_product(const SampledField& a, const SampledField& b) {
  require_compatible(a, b, "inner_product");
  double acc = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
  return acc * a.grid().cell_volume();
}

double lipschitz_constant(const SampledField& u) {
  const auto& g = u.grid();
  const int n = g.points_per_axis;
  double lip = 0.0;
  for (std::size_t i = 0; i < u.num_points(); ++i) {
    auto idx = g.multi_index(i);
    for (int d = 0; d < g.dim; ++d) {
      auto next = idx;
      next[d] += 1;
      if (next[d] == n) {
        if (g.kind == GridKind::TruncatedBox) continue;
        next[d] = 0;
      }
      const std::size_t j = g.flat_index(next);
      double s = 0.0;
      for (int c = 0; c < u.components(); ++c) s += std::pow(u(j, c) - u(i, c), 2);
      lip = std::max(lip, std::sqrt(s) / g.spacing);
    }
  }
  return lip;
}

std::vector<double> integral(const SampledField& u, const Mask* region) {
  std::vector<double> out(u.components(), 0.0);
  for (std::size_t i = 0; i < u.num_points(); ++i) {
    if (region && !region->contains(i)) continue;
    for (int c = 0; c < u.components(); ++c) out[c] += u(i, c);
  }
  for (double& v : out) v *= u.grid().cell_volume();
  return out;
}

}  // namespace fraccv
