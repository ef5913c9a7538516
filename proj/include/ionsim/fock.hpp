#pragma once

#include <complex>

#include <Eigen/Dense>

#include "ionsim/errors.hpp"

namespace ionsim::fock {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Qubit basis order, fixed once: index 0 = |e>, index 1 = |g> (excited on top).
inline constexpr int kQubitExcited = 0;
inline constexpr int kQubitGround = 1;

/// A single vibrational mode truncated to the Fock levels |0> .. |dim-1>.
struct TruncatedMode {
    int dim;
    explicit TruncatedMode(int dim_);
};

/// Dense complex operator acting on one truncated mode.
///
/// Entries are checked finite on construction; adjoint(adjoint(A)) == A holds
/// exactly since the adjoint is an elementwise conjugate-transpose.
class ModeOperator {
public:
    explicit ModeOperator(Matrix entries);

    int dim() const { return static_cast<int>(entries_.rows()); }
    const Matrix& matrix() const { return entries_; }
    ModeOperator adjoint() const { return ModeOperator(entries_.adjoint()); }

private:
    Matrix entries_;
};

ModeOperator annihilation(TruncatedMode mode);
ModeOperator creation(TruncatedMode mode);
ModeOperator number_operator(TruncatedMode mode);
ModeOperator identity_operator(TruncatedMode mode);

// Bare shift operators: shift_down(k) maps |n> -> |n-k> for n >= k and
// annihilates |n < k>; shift_up(k) is its adjoint and annihilates the top k
// levels of the truncated basis. No sqrt(n) factors.
ModeOperator shift_down(TruncatedMode mode, int k);
ModeOperator shift_up(TruncatedMode mode, int k);

/// Dimensions of the full space qubit (x) mode_x (x) mode_y.
struct SpaceDims {
    int x;
    int y;
    SpaceDims(int dim_x, int dim_y);
    int total() const { return 2 * x * y; }
    bool operator==(const SpaceDims&) const = default;
};

// Flattened index into the full space. Index order is fixed project-wide:
// qubit slowest, then mode x, then mode y.
inline int state_index(const SpaceDims& d, int q, int nx, int ny) {
    return (q * d.x + nx) * d.y + ny;
}

enum class Slot { Qubit, ModeX, ModeY };

/// Embeds a single-factor operator into the full space, identity on the other
/// factors. `op` must be 2x2 for the qubit slot and match the mode dimension
/// otherwise.
Matrix embed(const Matrix& op, Slot slot, const SpaceDims& dims);

/// Normalized amplitude vector on qubit (x) mode_x (x) mode_y.
class HybridState {
public:
    HybridState(SpaceDims dims, Vector amplitudes);

    static HybridState basis(SpaceDims dims, int qubit, int nx, int ny);
    // (|e> + |g>)/sqrt(2) (x) |nx, ny>
    static HybridState qubit_superposition(SpaceDims dims, int nx, int ny);

    const SpaceDims& dims() const { return dims_; }
    const Vector& amplitudes() const { return amps_; }
    Complex amplitude(int q, int nx, int ny) const {
        return amps_[state_index(dims_, q, nx, ny)];
    }
    double norm() const { return amps_.norm(); }

    /// Total population with mode-x or mode-y Fock index in the top `band`
    /// levels of its basis. Truncation-error monitor.
    double leakage(int band) const;

private:
    SpaceDims dims_;
    Vector amps_;
};

} // namespace ionsim::fock
