#ifndef TANGENCYLAB_CORE_HPP_
#define TANGENCYLAB_CORE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace tangencylab
{

/// Errors raised when an orbit leaves the piece of the model it was asked
/// to follow. `step` is the iterate at which the violation happened.
class DomainError : public std::runtime_error
{
public:
    DomainError(const std::string& what, std::size_t step = 0)
        : std::runtime_error(what), step_(step)
    {
    }
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Invalid user input (configuration, shapes, arguments).
class ValidationError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure did not converge or hit precision limits.
class NumericalError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// A lemma or operation was invoked outside its hypotheses.
class PreconditionError : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

struct Vec2
{
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double max_norm(Vec2 v) { return std::max(std::abs(v.x), std::abs(v.y)); }

/// Row-major 2x2 matrix.
struct Mat2
{
    std::array<std::array<double, 2>, 2> m{{{1.0, 0.0}, {0.0, 1.0}}};

    static Mat2 identity() { return {}; }
    static Mat2 diag(double a, double d) { return {{{{a, 0.0}, {0.0, d}}}}; }
    static Mat2 from(double a, double b, double c, double d)
    {
        return {{{{a, b}, {c, d}}}};
    }

    double operator()(int i, int j) const { return m[i][j]; }
    double& operator()(int i, int j) { return m[i][j]; }

    double det() const { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }
    double trace() const { return m[0][0] + m[1][1]; }

    friend Mat2 operator*(const Mat2& a, const Mat2& b)
    {
        Mat2 r;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                r.m[i][j] = a.m[i][0] * b.m[0][j] + a.m[i][1] * b.m[1][j];
        return r;
    }
    friend Vec2 operator*(const Mat2& a, Vec2 v)
    {
        return {a.m[0][0] * v.x + a.m[0][1] * v.y, a.m[1][0] * v.x + a.m[1][1] * v.y};
    }
    friend Mat2 operator-(const Mat2& a, const Mat2& b)
    {
        return from(a.m[0][0] - b.m[0][0], a.m[0][1] - b.m[0][1],
                    a.m[1][0] - b.m[1][0], a.m[1][1] - b.m[1][1]);
    }

    /// Solves A v = rhs. Throws NumericalError on a singular matrix.
    Vec2 solve(Vec2 rhs) const
    {
        const double d = det();
        const double scale = std::max({std::abs(m[0][0] * m[1][1]), std::abs(m[0][1] * m[1][0]),
                                       std::numeric_limits<double>::min()});
        if (d == 0.0 || std::abs(d) < 1e-300 * scale)
            throw NumericalError("singular 2x2 system");
        return {(m[1][1] * rhs.x - m[0][1] * rhs.y) / d, (m[0][0] * rhs.y - m[1][0] * rhs.x) / d};
    }
};

/// Eigenvalues of a real 2x2 matrix, ordered by decreasing modulus.
inline std::array<std::complex<double>, 2> eigenvalues(const Mat2& a)
{
    const double tr = a.trace();
    const double det = a.det();
    const double disc = 0.25 * tr * tr - det;
    std::complex<double> l1, l2;
    if (disc >= 0.0) {
        // Avoid cancellation for the smaller root.
        const double s = std::sqrt(disc);
        const double big = 0.5 * tr + (tr >= 0.0 ? s : -s);
        l1 = big;
        l2 = big != 0.0 ? det / big : 0.0;
    } else {
        const double s = std::sqrt(-disc);
        l1 = {0.5 * tr, s};
        l2 = {0.5 * tr, -s};
    }
    if (std::abs(l2) > std::abs(l1))
        std::swap(l1, l2);
    return {l1, l2};
}

struct Interval
{
    double lo = 0.0;
    double hi = 0.0;

    double length() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double v) const { return lo <= v && v <= hi; }
    bool contains_open(double v) const { return lo < v && v < hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

} // namespace tangencylab

#endif // TANGENCYLAB_CORE_HPP_
