#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fraccv {

/// Error raised for invalid inputs or ill-posed requests anywhere in the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class GridKind { PeriodicCell, TruncatedBox };

/// How fast a field decays beyond the grid. Controls whether operators with
/// far-reaching kernels may be evaluated on a truncated box.
enum class DecayClass { CompactSupport, SchwartzLike, Unknown };

std::string to_string(GridKind kind);
std::string to_string(DecayClass decay);
GridKind grid_kind_from_string(const std::string& s);
DecayClass decay_class_from_string(const std::string& s);

/// Uniform grid on the unit cell Q = [0,1)^n (periodic) or on the box
/// [-L, L)^n standing in for R^n. Nodes sit at origin + i*h, i = 0..N-1.
struct GridSpec {
  int dim = 1;
  GridKind kind = GridKind::PeriodicCell;
  double half_extent = 0.0;  // L, truncated box only
  int points_per_axis = 0;   // N
  double spacing = 0.0;      // h, filled by make_grid

  [[nodiscard]] double cell_length() const {
    return kind == GridKind::PeriodicCell ? 1.0 : 2.0 * half_extent;
  }
  [[nodiscard]] double origin() const {
    return kind == GridKind::PeriodicCell ? 0.0 : -half_extent;
  }
  [[nodiscard]] double coordinate(int i) const { return origin() + i * spacing; }
  [[nodiscard]] std::size_t num_points() const;
  [[nodiscard]] double cell_volume() const;  // h^n

  /// Row-major: axis 0 varies slowest.
  [[nodiscard]] std::array<int, 3> multi_index(std::size_t flat) const;
  [[nodiscard]] std::size_t flat_index(std::span<const int> idx) const;
  [[nodiscard]] std::array<double, 3> point(std::size_t flat) const;

  /// Nearest node to a physical location (no wrapping on truncated boxes).
  [[nodiscard]] std::size_t nearest_node(std::span<const double> x) const;

  bool operator==(const GridSpec& other) const = default;
};

/// Validates and fills the derived spacing.
/// Throws Error on odd or too small N, non-positive L, or dim outside 1..3.
GridSpec make_grid(GridSpec spec);

GridSpec periodic_grid(int dim, int n);
GridSpec box_grid(int dim, double half_extent, int n);

/// Values of u: R^n -> R^m on the nodes of a grid; layout is row-major over
/// the axes with the m components innermost.
class SampledField {
 public:
  SampledField() = default;
  SampledField(GridSpec grid, int components, DecayClass decay = DecayClass::Unknown);
  SampledField(GridSpec grid, int components, std::vector<double> values,
               DecayClass decay = DecayClass::Unknown);

  using PointFn = std::function<void(std::span<const double> x, std::span<double> out)>;
  using ScalarFn = std::function<double(std::span<const double> x)>;

  static SampledField from_function(const GridSpec& grid, int components, const PointFn& fn,
                                    DecayClass decay);
  static SampledField scalar(const GridSpec& grid, const ScalarFn& fn, DecayClass decay);

  [[nodiscard]] const GridSpec& grid() const { return grid_; }
  [[nodiscard]] int components() const { return components_; }
  [[nodiscard]] DecayClass decay() const { return decay_; }
  void set_decay(DecayClass d) { decay_ = d; }
  [[nodiscard]] std::size_t num_points() const { return grid_.num_points(); }

  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::span<double> values() { return values_; }
  [[nodiscard]] const std::vector<double>& data() const { return values_; }

  [[nodiscard]] double operator()(std::size_t point, int comp = 0) const {
    return values_[point * components_ + comp];
  }
  double& operator()(std::size_t point, int comp = 0) {
    return values_[point * components_ + comp];
  }

  [[nodiscard]] SampledField component(int c) const;
  void set_component(int c, const SampledField& scalar_field);

  /// Throws Error if any value is NaN or infinite.
  void validate_finite() const;
  [[nodiscard]] bool is_zero() const;

 private:
  GridSpec grid_{};
  int components_ = 1;
  std::vector<double> values_;
  DecayClass decay_ = DecayClass::Unknown;
};

/// Boolean region on a grid (e.g. the open set Omega).
struct Mask {
  GridSpec grid;
  std::vector<std::uint8_t> inside;

  static Mask from_predicate(const GridSpec& grid,
                             const std::function<bool(std::span<const double>)>& pred);
  static Mask full(const GridSpec& grid);
  [[nodiscard]] bool contains(std::size_t point) const { return inside[point] != 0; }
  [[nodiscard]] Mask complement() const;
  [[nodiscard]] std::size_t count() const;
};

// Pointwise algebra. Grids and component counts must agree.
SampledField operator+(const SampledField& a, const SampledField& b);
SampledField operator-(const SampledField& a, const SampledField& b);
SampledField operator*(double s, const SampledField& a);
/// Scalar field times (possibly vector-valued) field.
SampledField multiply(const SampledField& scalar, const SampledField& a);

/// Discrete L^p norm (sum |u|^p h^n)^(1/p), |.| the Euclidean norm over
/// components; p = infinity gives the max norm. Restricted to `region` if given.
double lp_norm(const SampledField& u, double p, const Mask* region = nullptr);

/// Grid inner product h^n sum_x <a(x), b(x)>.
double inner_product(const SampledField& a, const SampledField& b);

/// Discrete Lipschitz constant: max over nodes and axes of |forward difference| / h.
double lipschitz_constant(const SampledField& u);

/// Sum of all values times h^n, per component.
std::vector<double> integral(const SampledField& u, const Mask* region = nullptr);

/// Throws Error unless a and b share a grid and component count.
void require_compatible(const SampledField& a, const SampledField& b, const char* what);

}  // namespace fraccv
