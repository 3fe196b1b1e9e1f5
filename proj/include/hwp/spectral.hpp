#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace hwp {

using cplx = std::complex<double>;

/// Uniform periodic grid on [-L, L) with n points, y_j = -L + j h.
class Grid1D {
public:
    Grid1D(std::size_t n, double half_width);

    std::size_t n() const { return n_; }
    double half_width() const { return half_width_; }
    double spacing() const { return h_; }
    double point(std::size_t j) const { return -half_width_ + h_ * static_cast<double>(j); }

    /// Wavenumbers in standard DFT ordering (0, 1, ..., n/2-1, -n/2, ..., -1) * pi/L.
    const std::vector<double>& wavenumbers() const { return k_; }
    std::vector<double> points() const;

    bool operator==(const Grid1D& o) const { return n_ == o.n_ && half_width_ == o.half_width_; }

private:
    std::size_t n_;
    double half_width_;
    double h_;
    std::vector<double> k_;
};

/// Complex grid function.
struct Field {
    Grid1D grid;
    std::vector<cplx> values;

    explicit Field(Grid1D g) : grid(std::move(g)), values(grid.n()) {}
    Field(Grid1D g, std::vector<cplx> v);

    static Field from_function(const Grid1D& g, const std::function<cplx(double)>& f);

    std::size_t size() const { return values.size(); }
    cplx& operator[](std::size_t j) { return values[j]; }
    const cplx& operator[](std::size_t j) const { return values[j]; }

    bool finite() const;
    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(cplx s);
};

Field operator-(Field a, const Field& b);
Field operator+(Field a, const Field& b);
Field operator*(cplx s, Field a);

/// In-place unnormalized forward / normalized inverse DFT of length n.
/// Plans are cached per length and shared; execution is thread-safe.
void fft_forward(std::span<cplx> data);
void fft_inverse(std::span<cplx> data);

/// Spectral derivative of order 1 or 2. The Nyquist mode is dropped for odd orders.
Field derivative(const Field& f, int order);

/// Scalar products and norms by the periodic trapezoid rule.
double l2_norm(const Field& f);
double l2_norm_sq(const Field& f);
double l2_distance(const Field& a, const Field& b);

struct GridNorms {
    double l2 = 0.0;
    double l2_of_y_times_f = 0.0;
    double l2_of_grad_f = 0.0;
    /// sigma[k] = sum over a+b <= k of ||y^a d^b f||, for k = 0..4.
    std::vector<double> sigma;
};

GridNorms grid_norms(const Field& f, int max_order = 4);

/// ||y^a d^b f|| for every a + b <= k, summed.
double sigma_norm(const Field& f, int k);

/// First moment int y |f|^2 dy and second moment int y^2 |f|^2 dy.
double first_moment(const Field& f);
double second_moment(const Field& f);

/// Mass of |f|^2 within `margin` points of either grid edge, relative to total.
double edge_mass_fraction(const Field& f, std::size_t margin = 8);

// ---------------------------------------------------------------------------
// Kernels

struct SmoothKernel {
    double k0 = 0.0;     ///< K(0)
    double grad0 = 0.0;  ///< K'(0)
    double hess0 = 0.0;  ///< K''(0)
    std::function<double(double)> eval;
    std::string name = "custom";
};

/// K(x) = lambda |x|^-gamma with 0 < gamma < 1.
struct HomogeneousKernel {
    double lambda = 1.0;
    double gamma = 0.5;
};

struct KernelSpec {
    std::variant<SmoothKernel, HomogeneousKernel> variant;

    bool is_smooth() const { return std::holds_alternative<SmoothKernel>(variant); }
    bool is_homogeneous() const { return std::holds_alternative<HomogeneousKernel>(variant); }
    const SmoothKernel& smooth() const;
    const HomogeneousKernel& homogeneous() const;

    static KernelSpec gaussian(double amplitude = 1.0);   ///< A exp(-y^2)
    static KernelSpec lorentzian(double amplitude = 1.0); ///< A / (1 + y^2)
    static KernelSpec constant(double c);
    static KernelSpec zero() { return constant(0.0); }
    static KernelSpec power_law(double lambda, double gamma);
    static KernelSpec smooth_custom(double k0, double grad0, double hess0,
                                    std::function<double(double)> eval);

    /// "power_law:lambda,gamma", "gaussian[:A]", "lorentzian[:A]", "constant:c" or "zero".
    static KernelSpec parse(const std::string& text);
    std::string describe() const;
};

struct KernelJet {
    double k0 = 0.0;
    double grad0 = 0.0;
    double hess0 = 0.0;
};

/// Returns the stored Taylor jet after checking it against central
/// differences of the kernel at the origin.
KernelJet taylor_kernel_coefficients(const KernelSpec& kernel, double tol = 1e-6);

/// Exact cell average of |y|^-gamma over [y - h/2, y + h/2].
double power_law_cell_average(double y, double h, double gamma);

/// Precomputed linear (non-periodic) convolution with a fixed kernel on a grid:
///   out_i = h * sum_j k((i - j) h) f_j,
/// evaluated by zero-padding to length 2n.
class ConvolutionOperator {
public:
    /// `sample(m)` returns the kernel value attached to the offset m*h, for |m| < n.
    ConvolutionOperator(const Grid1D& grid, const std::function<double(long)>& sample);

    static ConvolutionOperator for_kernel(const Grid1D& grid, const KernelSpec& kernel);
    /// coefficient * K(scale * y) - subtract, sampled on the grid. Smooth kernels only.
    static ConvolutionOperator scaled_smooth(const Grid1D& grid, const SmoothKernel& kernel,
                                             double scale, double coefficient, double subtract);
    /// coefficient * |y|^-gamma, cell averaged.
    static ConvolutionOperator power_law(const Grid1D& grid, double gamma, double coefficient);

    /// Real convolution of real data.
    std::vector<double> apply(std::span<const double> f) const;

    const Grid1D& grid() const { return grid_; }
    /// Padded kernel samples (length 2n, circular ordering).
    const std::vector<double>& samples() const { return samples_; }

private:
    Grid1D grid_;
    std::vector<double> samples_;
    std::vector<cplx> kernel_hat_;
};

/// K * f for f = |u|^2, returned as a real-valued field. Warns (via the
/// returned flag) when f does not decay at the edges.
struct ConvolutionResult {
    Field value;
    bool edge_warning = false;
};
ConvolutionResult hartree_convolution(const Field& f_abs2, const KernelSpec& kernel);

/// |u|^2 as a real vector.
std::vector<double> abs2(const Field& f);

}  // namespace hwp
