#include "cavityq/fock.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

namespace cavityq {

std::size_t dimension_cap() {
    if (const char* env = std::getenv("CAVITYQ_DIM_CAP")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return kDefaultDimCap;
}

HilbertShape::HilbertShape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    const std::size_t cap = dimension_cap();
    total_ = 1;
    for (std::size_t d : dims_) {
        if (d == 0) fail(ErrorKind::Argument, "subsystem dimension must be >= 1");
        if (total_ > cap / d) {
            fail(ErrorKind::Capacity, "Hilbert space dimension exceeds cap of " + std::to_string(cap));
        }
        total_ *= d;
    }
}

std::size_t HilbertShape::stride(std::size_t k) const {
    std::size_t s = 1;
    for (std::size_t j = dims_.size(); j-- > k + 1;) s *= dims_[j];
    return s;
}

std::vector<std::size_t> HilbertShape::unflatten(std::size_t flat) const {
    std::vector<std::size_t> digits(dims_.size());
    for (std::size_t j = dims_.size(); j-- > 0;) {
        digits[j] = flat % dims_[j];
        flat /= dims_[j];
    }
    return digits;
}

std::size_t HilbertShape::flatten(std::span<const std::size_t> digits) const {
    if (digits.size() != dims_.size()) fail(ErrorKind::Shape, "level list length does not match shape");
    std::size_t flat = 0;
    for (std::size_t j = 0; j < dims_.size(); ++j) {
        if (digits[j] >= dims_[j]) fail(ErrorKind::Argument, "level index out of range");
        flat = flat * dims_[j] + digits[j];
    }
    return flat;
}

HilbertShape HilbertShape::concat(const HilbertShape& other) const {
    std::vector<std::size_t> d = dims_;
    d.insert(d.end(), other.dims_.begin(), other.dims_.end());
    return HilbertShape(std::move(d));
}

std::string to_string(const HilbertShape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.subsystems(); ++i) os << (i ? "," : "") << shape.dim(i);
    os << ']';
    return os.str();
}

void require_same_shape(const HilbertShape& a, const HilbertShape& b, const char* what) {
    if (!(a == b)) fail(ErrorKind::Shape, std::string(what) + ": shape " + to_string(a) + " vs " + to_string(b));
}

// ---------------------------------------------------------------------------

StateVector::StateVector(HilbertShape shape, Vector amplitudes, double leakage)
    : shape_(std::move(shape)), amps_(std::move(amplitudes)), leakage_(leakage) {
    if (static_cast<std::size_t>(amps_.size()) != shape_.total()) {
        fail(ErrorKind::Shape, "amplitude vector length does not match shape " + to_string(shape_));
    }
}

StateVector StateVector::basis(const HilbertShape& shape, std::size_t flat_index) {
    if (flat_index >= shape.total()) fail(ErrorKind::Argument, "basis index out of range");
    Vector v = Vector::Zero(static_cast<Eigen::Index>(shape.total()));
    v(static_cast<Eigen::Index>(flat_index)) = 1.0;
    return StateVector(shape, std::move(v));
}

StateVector StateVector::basis(const HilbertShape& shape, std::span<const std::size_t> levels) {
    return basis(shape, shape.flatten(levels));
}

StateVector StateVector::normalized() const {
    const double n = norm();
    if (!(n > 0.0) || !std::isfinite(n)) fail(ErrorKind::Degenerate, "cannot normalize a zero or non-finite state");
    return StateVector(shape_, amps_ / n, leakage_);
}

std::vector<double> StateVector::probabilities() const {
    std::vector<double> p(size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(amps_(static_cast<Eigen::Index>(i)));
    return p;
}

// ---------------------------------------------------------------------------

Operator::Operator(HilbertShape shape, Matrix matrix, double leakage)
    : shape_(std::move(shape)), m_(std::move(matrix)), leakage_(leakage) {
    const auto d = static_cast<Eigen::Index>(shape_.total());
    if (m_.rows() != d || m_.cols() != d) {
        fail(ErrorKind::Shape, "operator matrix side does not match shape " + to_string(shape_));
    }
}

Operator Operator::identity(const HilbertShape& shape) {
    const auto d = static_cast<Eigen::Index>(shape.total());
    return Operator(shape, Matrix::Identity(d, d));
}

Operator Operator::adjoint() const { return Operator(shape_, m_.adjoint(), leakage_); }

StateVector Operator::apply(const StateVector& psi) const {
    require_same_shape(shape_, psi.shape(), "operator application");
    return StateVector(shape_, m_ * psi.amplitudes());
}

Operator Operator::operator*(const Operator& rhs) const {
    require_same_shape(shape_, rhs.shape_, "operator product");
    return Operator(shape_, m_ * rhs.m_);
}

Operator Operator::operator+(const Operator& rhs) const {
    require_same_shape(shape_, rhs.shape_, "operator sum");
    return Operator(shape_, m_ + rhs.m_);
}

Operator Operator::operator-(const Operator& rhs) const {
    require_same_shape(shape_, rhs.shape_, "operator difference");
    return Operator(shape_, m_ - rhs.m_);
}

Operator Operator::scaled(cplx factor) const { return Operator(shape_, m_ * factor); }

// ---------------------------------------------------------------------------

Operator annihilation(std::size_t n_levels) {
    if (n_levels == 0) fail(ErrorKind::Argument, "invalid dimension 0 for annihilation operator");
    HilbertShape shape{n_levels};
    const auto d = static_cast<Eigen::Index>(n_levels);
    Matrix m = Matrix::Zero(d, d);
    for (Eigen::Index n = 1; n < d; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n));
    return Operator(shape, std::move(m));
}

Operator creation(std::size_t n_levels) { return annihilation(n_levels).adjoint(); }

Operator number_operator(std::size_t n_levels) {
    if (n_levels == 0) fail(ErrorKind::Argument, "invalid dimension 0 for number operator");
    const auto d = static_cast<Eigen::Index>(n_levels);
    Matrix m = Matrix::Zero(d, d);
    for (Eigen::Index n = 0; n < d; ++n) m(n, n) = static_cast<double>(n);
    return Operator(HilbertShape{n_levels}, std::move(m));
}

Operator tensor(const Operator& a, const Operator& b) {
    HilbertShape shape = a.shape().concat(b.shape());
    const Matrix& A = a.matrix();
    const Matrix& B = b.matrix();
    Matrix m(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            m.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return Operator(std::move(shape), std::move(m));
}

StateVector tensor(const StateVector& a, const StateVector& b) {
    HilbertShape shape = a.shape().concat(b.shape());
    const Vector& x = a.amplitudes();
    const Vector& y = b.amplitudes();
    Vector v(x.size() * y.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) v.segment(i * y.size(), y.size()) = x(i) * y;
    return StateVector(std::move(shape), std::move(v));
}

Operator embed(const Operator& local, std::size_t k, const HilbertShape& shape) {
    if (k >= shape.subsystems()) fail(ErrorKind::Argument, "subsystem index " + std::to_string(k) + " out of range");
    if (local.shape().subsystems() != 1 || local.dim() != shape.dim(k)) {
        fail(ErrorKind::Shape, "local operator dimension does not match subsystem " + std::to_string(k));
    }
    // I_left (x) local (x) I_right, written out directly to avoid two Kronecker passes.
    const std::size_t right = shape.stride(k);
    const std::size_t dk = shape.dim(k);
    const std::size_t left = shape.total() / (right * dk);
    const auto D = static_cast<Eigen::Index>(shape.total());
    Matrix m = Matrix::Zero(D, D);
    const Matrix& L = local.matrix();
    for (std::size_t l = 0; l < left; ++l)
        for (std::size_t i = 0; i < dk; ++i)
            for (std::size_t j = 0; j < dk; ++j) {
                const cplx v = L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                if (v == cplx{}) continue;
                for (std::size_t r = 0; r < right; ++r) {
                    const auto row = static_cast<Eigen::Index>((l * dk + i) * right + r);
                    const auto col = static_cast<Eigen::Index>((l * dk + j) * right + r);
                    m(row, col) = v;
                }
            }
    return Operator(shape, std::move(m));
}

// ---------------------------------------------------------------------------

namespace {

double one_norm(const Matrix& a) { return a.cwiseAbs().colwise().sum().maxCoeff(); }

// Pade numerator coefficients for degrees 3, 5, 7, 9, 13 (Higham 2005).
constexpr double kPade3[] = {120.0, 60.0, 12.0, 1.0};
constexpr double kPade5[] = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
constexpr double kPade7[] = {17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0};
constexpr double kPade9[] = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
                             2162160.0,     110880.0,     3960.0,       90.0,        1.0};
constexpr double kPade13[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                              1187353796428800.0,  129060195264000.0,   10559470521600.0,
                              670442572800.0,      33522128640.0,       1323241920.0,
                              40840800.0,          960960.0,            16380.0,
                              182.0,               1.0};
constexpr double kTheta[] = {1.495585217958292e-2, 2.539398330063230e-1, 9.504178996162932e-1,
                             2.097847961257068e0, 5.371920351148152e0};

Matrix pade_low(const Matrix& a, std::span<const double> b) {
    const Eigen::Index n = a.rows();
    const Matrix I = Matrix::Identity(n, n);
    const Matrix a2 = a * a;
    Matrix u_even = b[1] * I;
    Matrix v = b[0] * I;
    Matrix power = I;
    for (std::size_t k = 2; k < b.size(); k += 2) {
        power = power * a2;
        u_even += b[k + 1] * power;
        v += b[k] * power;
    }
    const Matrix u = a * u_even;
    return (v - u).partialPivLu().solve(v + u);
}

Matrix pade13(const Matrix& a) {
    const auto& b = kPade13;
    const Eigen::Index n = a.rows();
    const Matrix I = Matrix::Identity(n, n);
    const Matrix a2 = a * a;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;
    const Matrix u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * I);
    const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * I;
    return (v - u).partialPivLu().solve(v + u);
}

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) fail(ErrorKind::Numeric, std::string(what) + ": non-finite matrix entries");
}

} // namespace

Matrix expm(const Matrix& a) {
    if (a.rows() != a.cols()) fail(ErrorKind::Shape, "expm of a non-square matrix");
    require_finite(a, "expm");
    if (a.rows() == 0) return a;
    const double norm = one_norm(a);
    if (norm <= kTheta[0]) return pade_low(a, kPade3);
    if (norm <= kTheta[1]) return pade_low(a, kPade5);
    if (norm <= kTheta[2]) return pade_low(a, kPade7);
    if (norm <= kTheta[3]) return pade_low(a, kPade9);
    int s = std::max(0, static_cast<int>(std::ceil(std::log2(norm / kTheta[4]))));
    Matrix r = pade13(a / std::ldexp(1.0, s));
    for (int i = 0; i < s; ++i) r = r * r;
    return r;
}

bool is_hermitian(const Matrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

Operator expm(const Operator& h, double t) {
    const Matrix& H = h.matrix();
    require_finite(H, "expm");
    if (!std::isfinite(t)) fail(ErrorKind::Numeric, "expm: non-finite time");
    if (is_hermitian(H)) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(H);
        const Eigen::VectorXd& w = es.eigenvalues();
        Vector phases(w.size());
        for (Eigen::Index i = 0; i < w.size(); ++i) phases(i) = std::polar(1.0, -w(i) * t);
        const Matrix& V = es.eigenvectors();
        return Operator(h.shape(), V * phases.asDiagonal() * V.adjoint());
    }
    return Operator(h.shape(), expm(Matrix(H * cplx(0.0, -t))));
}

double unitarity_error(const Matrix& u) {
    const Matrix g = u.adjoint() * u - Matrix::Identity(u.cols(), u.cols());
    return g.cwiseAbs().maxCoeff();
}

double unitarity_error(const Matrix& u, std::size_t interior) {
    const auto k = static_cast<Eigen::Index>(std::min<std::size_t>(interior, static_cast<std::size_t>(u.cols())));
    if (k == 0) return 0.0;
    const Matrix cols = u.leftCols(k);
    return (cols.adjoint() * cols - Matrix::Identity(k, k)).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------

StateVector coherent_state(cplx alpha, std::size_t n_levels) {
    if (n_levels == 0) fail(ErrorKind::Argument, "invalid dimension 0 for coherent state");
    if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag())) {
        fail(ErrorKind::Numeric, "coherent state amplitude is not finite");
    }
    const auto d = static_cast<Eigen::Index>(n_levels);
    Vector c(d);
    c(0) = std::exp(-0.5 * std::norm(alpha));
    for (Eigen::Index n = 1; n < d; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
    const double kept = c.squaredNorm();
    const double leakage = std::max(0.0, 1.0 - kept);
    if (!(kept > 0.0)) fail(ErrorKind::Numeric, "coherent state underflows in the truncated space");
    return StateVector(HilbertShape{n_levels}, c / std::sqrt(kept), leakage);
}

StateVector haar_random_state(const HilbertShape& shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto uniform = [&rng] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
    Vector v(static_cast<Eigen::Index>(shape.total()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        // Box-Muller pair as the real and imaginary parts.
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double phi = 2.0 * std::numbers::pi * uniform();
        v(i) = std::polar(r, phi);
    }
    return StateVector(shape, v / v.norm());
}

cplx inner(const StateVector& psi1, const StateVector& psi2) {
    require_same_shape(psi1.shape(), psi2.shape(), "inner product");
    return psi1.amplitudes().dot(psi2.amplitudes());
}

double fidelity(const StateVector& psi1, const StateVector& psi2) {
    return std::clamp(std::norm(inner(psi1, psi2)), 0.0, 1.0);
}

namespace {

struct Split {
    HilbertShape kept;
    std::vector<std::size_t> kept_index;  // flat -> kept flat
    std::vector<std::size_t> rest_index;  // flat -> traced flat
    std::size_t rest_total = 1;
};

Split split_subsystems(const HilbertShape& shape, std::span<const std::size_t> keep) {
    if (keep.empty()) fail(ErrorKind::Argument, "keep set must not be empty");
    std::vector<bool> is_kept(shape.subsystems(), false);
    std::vector<std::size_t> kept_dims;
    for (std::size_t k : keep) {
        if (k >= shape.subsystems()) fail(ErrorKind::Argument, "subsystem index " + std::to_string(k) + " out of range");
        if (is_kept[k]) fail(ErrorKind::Argument, "subsystem index " + std::to_string(k) + " listed twice");
        is_kept[k] = true;
        kept_dims.push_back(shape.dim(k));
    }
    std::vector<std::size_t> rest;
    for (std::size_t k = 0; k < shape.subsystems(); ++k)
        if (!is_kept[k]) rest.push_back(k);

    Split s{HilbertShape(kept_dims), {}, {}, 1};
    for (std::size_t k : rest) s.rest_total *= shape.dim(k);
    s.kept_index.resize(shape.total());
    s.rest_index.resize(shape.total());
    for (std::size_t flat = 0; flat < shape.total(); ++flat) {
        const auto digits = shape.unflatten(flat);
        std::size_t ki = 0, ri = 0;
        for (std::size_t k : keep) ki = ki * shape.dim(k) + digits[k];
        for (std::size_t k : rest) ri = ri * shape.dim(k) + digits[k];
        s.kept_index[flat] = ki;
        s.rest_index[flat] = ri;
    }
    return s;
}

} // namespace

Operator partial_trace(const StateVector& psi, std::span<const std::size_t> keep) {
    const Split s = split_subsystems(psi.shape(), keep);
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(s.kept.total()), static_cast<Eigen::Index>(s.rest_total));
    for (std::size_t flat = 0; flat < psi.size(); ++flat) {
        m(static_cast<Eigen::Index>(s.kept_index[flat]), static_cast<Eigen::Index>(s.rest_index[flat])) = psi[flat];
    }
    Matrix rho = m * m.adjoint();
    return Operator(s.kept, std::move(rho));
}

std::vector<double> mode_probabilities(const StateVector& psi, std::span<const std::size_t> keep) {
    const Split s = split_subsystems(psi.shape(), keep);
    std::vector<double> p(s.kept.total(), 0.0);
    for (std::size_t flat = 0; flat < psi.size(); ++flat) p[s.kept_index[flat]] += std::norm(psi[flat]);
    return p;
}

namespace {

// For each traced configuration, the flat indices of its target block.
std::vector<std::vector<std::size_t>> target_blocks(const Operator& local, std::span<const std::size_t> targets,
                                                    const HilbertShape& shape) {
    const Split s = split_subsystems(shape, targets);
    if (s.kept.dims() != local.shape().dims()) {
        fail(ErrorKind::Shape, "local operator shape " + to_string(local.shape()) + " does not match target dims " +
                                   to_string(s.kept));
    }
    std::vector<std::vector<std::size_t>> blocks(s.rest_total, std::vector<std::size_t>(s.kept.total()));
    for (std::size_t flat = 0; flat < shape.total(); ++flat) blocks[s.rest_index[flat]][s.kept_index[flat]] = flat;
    return blocks;
}

} // namespace

Operator embed(const Operator& local, std::span<const std::size_t> targets, const HilbertShape& shape) {
    const auto blocks = target_blocks(local, targets, shape);
    const auto D = static_cast<Eigen::Index>(shape.total());
    Matrix m = Matrix::Zero(D, D);
    const Matrix& L = local.matrix();
    for (const auto& block : blocks)
        for (std::size_t i = 0; i < block.size(); ++i)
            for (std::size_t j = 0; j < block.size(); ++j) {
                m(static_cast<Eigen::Index>(block[i]), static_cast<Eigen::Index>(block[j])) =
                    L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
    return Operator(shape, std::move(m), local.leakage());
}

StateVector apply_local(const Operator& local, std::span<const std::size_t> targets, const StateVector& psi) {
    const auto blocks = target_blocks(local, targets, psi.shape());
    const Vector& in = psi.amplitudes();
    Vector out(in.size());
    Vector x(static_cast<Eigen::Index>(local.dim()));
    for (const auto& block : blocks) {
        for (std::size_t i = 0; i < block.size(); ++i) x(static_cast<Eigen::Index>(i)) = in(static_cast<Eigen::Index>(block[i]));
        const Vector y = local.matrix() * x;
        for (std::size_t i = 0; i < block.size(); ++i) out(static_cast<Eigen::Index>(block[i])) = y(static_cast<Eigen::Index>(i));
    }
    return StateVector(psi.shape(), std::move(out));
}

double purity(const Operator& rho) { return (rho.matrix() * rho.matrix()).trace().real(); }

} // namespace cavityq
