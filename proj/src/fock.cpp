#include "ionsim/fock.hpp"

#include <cmath>
#include <string>

namespace ionsim::fock {

TruncatedMode::TruncatedMode(int dim_) : dim(dim_) {
    if (dim < 2) {
        throw std::invalid_argument("TruncatedMode: dim must be >= 2, got " +
                                    std::to_string(dim));
    }
}

ModeOperator::ModeOperator(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols()) {
        throw std::invalid_argument("ModeOperator: matrix must be square");
    }
    if (!entries_.allFinite()) {
        throw std::invalid_argument("ModeOperator: entries must be finite");
    }
}

ModeOperator annihilation(TruncatedMode mode) {
    Matrix a = Matrix::Zero(mode.dim, mode.dim);
    for (int n = 1; n < mode.dim; ++n) {
        a(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    return ModeOperator(std::move(a));
}

ModeOperator creation(TruncatedMode mode) {
    return annihilation(mode).adjoint();
}

ModeOperator number_operator(TruncatedMode mode) {
    Matrix n = Matrix::Zero(mode.dim, mode.dim);
    for (int i = 0; i < mode.dim; ++i) n(i, i) = static_cast<double>(i);
    return ModeOperator(std::move(n));
}

ModeOperator identity_operator(TruncatedMode mode) {
    return ModeOperator(Matrix::Identity(mode.dim, mode.dim));
}

ModeOperator shift_down(TruncatedMode mode, int k) {
    if (k < 0 || k >= mode.dim) {
        throw std::invalid_argument("shift_down: require 0 <= k < dim, got k=" +
                                    std::to_string(k) + " dim=" +
                                    std::to_string(mode.dim));
    }
    Matrix v = Matrix::Zero(mode.dim, mode.dim);
    for (int n = k; n < mode.dim; ++n) v(n - k, n) = 1.0;
    return ModeOperator(std::move(v));
}

ModeOperator shift_up(TruncatedMode mode, int k) {
    return shift_down(mode, k).adjoint();
}

SpaceDims::SpaceDims(int dim_x, int dim_y) : x(dim_x), y(dim_y) {
    TruncatedMode check_x(dim_x);
    TruncatedMode check_y(dim_y);
}

Matrix embed(const Matrix& op, Slot slot, const SpaceDims& dims) {
    const int expected = slot == Slot::Qubit ? 2 : (slot == Slot::ModeX ? dims.x : dims.y);
    if (op.rows() != expected || op.cols() != expected) {
        throw std::invalid_argument("embed: operator dimension " +
                                    std::to_string(op.rows()) +
                                    " does not match slot dimension " +
                                    std::to_string(expected));
    }
    const int total = dims.total();
    Matrix full = Matrix::Zero(total, total);
    for (int q = 0; q < 2; ++q) {
        for (int nx = 0; nx < dims.x; ++nx) {
            for (int ny = 0; ny < dims.y; ++ny) {
                const int row = state_index(dims, q, nx, ny);
                switch (slot) {
                    case Slot::Qubit:
                        for (int q2 = 0; q2 < 2; ++q2) {
                            full(row, state_index(dims, q2, nx, ny)) = op(q, q2);
                        }
                        break;
                    case Slot::ModeX:
                        for (int m = 0; m < dims.x; ++m) {
                            full(row, state_index(dims, q, m, ny)) = op(nx, m);
                        }
                        break;
                    case Slot::ModeY:
                        for (int m = 0; m < dims.y; ++m) {
                            full(row, state_index(dims, q, nx, m)) = op(ny, m);
                        }
                        break;
                }
            }
        }
    }
    return full;
}

HybridState::HybridState(SpaceDims dims, Vector amplitudes)
    : dims_(dims), amps_(std::move(amplitudes)) {
    if (amps_.size() != dims_.total()) {
        throw std::invalid_argument("HybridState: amplitude vector length " +
                                    std::to_string(amps_.size()) +
                                    " does not match dims total " +
                                    std::to_string(dims_.total()));
    }
    if (!amps_.allFinite()) {
        throw std::invalid_argument("HybridState: amplitudes must be finite");
    }
}

HybridState HybridState::basis(SpaceDims dims, int qubit, int nx, int ny) {
    if (qubit < 0 || qubit > 1 || nx < 0 || nx >= dims.x || ny < 0 || ny >= dims.y) {
        throw std::invalid_argument("HybridState::basis: index out of range");
    }
    Vector v = Vector::Zero(dims.total());
    v[state_index(dims, qubit, nx, ny)] = 1.0;
    return HybridState(dims, std::move(v));
}

HybridState HybridState::qubit_superposition(SpaceDims dims, int nx, int ny) {
    if (nx < 0 || nx >= dims.x || ny < 0 || ny >= dims.y) {
        throw std::invalid_argument("HybridState::qubit_superposition: index out of range");
    }
    Vector v = Vector::Zero(dims.total());
    const double w = 1.0 / std::sqrt(2.0);
    v[state_index(dims, kQubitExcited, nx, ny)] = w;
    v[state_index(dims, kQubitGround, nx, ny)] = w;
    return HybridState(dims, std::move(v));
}

double HybridState::leakage(int band) const {
    if (band < 1 || band >= std::min(dims_.x, dims_.y)) {
        throw std::invalid_argument("leakage: require 1 <= band < min(dim_x, dim_y)");
    }
    double total = 0.0;
    for (int q = 0; q < 2; ++q) {
        for (int nx = 0; nx < dims_.x; ++nx) {
            for (int ny = 0; ny < dims_.y; ++ny) {
                if (nx >= dims_.x - band || ny >= dims_.y - band) {
                    total += std::norm(amps_[state_index(dims_, q, nx, ny)]);
                }
            }
        }
    }
    return total;
}

} // namespace ionsim::fock
