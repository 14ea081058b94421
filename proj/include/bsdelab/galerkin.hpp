#ifndef BSDELAB_GALERKIN_HPP
#define BSDELAB_GALERKIN_HPP

#include <optional>
#include <vector>

#include "bsdelab/adapted_process.hpp"

namespace bsde {

/// Where a tensor basis element samples its state weight.
/// CellStart freezes the weight at the first knot of the cell; PerKnot
/// re-evaluates it at every knot of the cell. Both are adapted integrands;
/// PerKnot tracks state-dependent targets much more closely at equal size.
enum class StateSampling { CellStart, PerKnot };

/// Policy from which concrete bases are built (full horizon or per window).
struct BasisSpec {
    Index cell_knots = 4;
    int state_degree = 1;
    StateSampling sampling = StateSampling::CellStart;
};

/// Finite adapted subspace spanned by indicator-in-time cells times state
/// monomials, one copy per solution component.
class GalerkinBasis {
public:
    struct Element {
        Index cell = 0;
        Index component = 0;
        std::vector<int> exponents; // empty: the constant monomial
    };

    GalerkinBasis(const PathEnsemble& ens, std::vector<Index> cell_starts, Index window_end,
                  int state_degree, Index dim, StateSampling sampling);

    const PathEnsemble& ensemble() const { return *ens_; }
    Index size() const { return static_cast<Index>(elements_.size()); }
    Index dim() const { return dim_; }
    int state_degree() const { return state_degree_; }
    StateSampling sampling() const { return sampling_; }
    Index window_begin() const { return cell_starts_.front(); }
    Index window_end() const { return window_end_; }

    Index cell_count() const { return static_cast<Index>(cell_starts_.size()); }
    Index cell_begin(Index c) const { return cell_starts_[static_cast<std::size_t>(c)]; }
    Index cell_end(Index c) const {
        return c + 1 < cell_count() ? cell_starts_[static_cast<std::size_t>(c) + 1] : window_end_;
    }
    const std::vector<Index>& cell_starts() const { return cell_starts_; }
    const Element& element(Index k) const { return elements_[static_cast<std::size_t>(k)]; }

    /// Scalar weight of element k on path i at knot j (zero outside its cell).
    double element_value(Index k, Index path, Index knot) const;

    /// Materialized element, mostly for tests and diagnostics.
    AdaptedProcess element_process(Index k) const;

private:
    const PathEnsemble* ens_;
    std::vector<Index> cell_starts_;
    Index window_end_;
    int state_degree_;
    Index dim_;
    StateSampling sampling_;
    std::vector<Element> elements_;
    std::vector<std::vector<int>> monomials_; // shared exponent list, constant first
};

/// Evenly sized cells covering [begin, end); the last cell absorbs the rest.
std::vector<Index> uniform_cells(Index begin, Index end, Index cell_knots);

/// Cells over [0, J), sized per the spec's cell_knots.
GalerkinBasis build_tensor_basis(const PathEnsemble& ens, const std::vector<Index>& cell_starts,
                                 int state_degree, Index dim = 1,
                                 StateSampling sampling = StateSampling::CellStart);
GalerkinBasis build_tensor_basis(const PathEnsemble& ens, const BasisSpec& spec, Index dim = 1);

struct GramInfo {
    Matrix matrix;
    double condition = 0.0;
    bool near_singular = false;
};

/// G_kl = mean_i sum_j <e_k, e_l> dt_j, accumulated pairwise over paths.
GramInfo assemble_gram(const GalerkinBasis& basis);

/// Duality right side r_k = mean_i [ <Z_k(T_w), terminal> - sum_j <Z_k(j), f_j> dt_j ]
/// with Z_k the running Ito integral of element k from its cell start.
/// Pass an empty process for f = 0.
Vector assemble_rhs(const GalerkinBasis& basis, const AdaptedProcess& f, const Matrix& terminal);

struct GalerkinInfo {
    double gram_condition = 0.0;
    bool near_singular = false;
    double ridge_used = 0.0;
    double solve_residual = 0.0; // ||(G + ridge I) c - r||_2
    double sampling_se = 0.0;    // estimated Monte Carlo error of the projection
    Vector coefficients;
};

/// Solve (G + ridge I) c = r and reconstruct Y = sum_k c_k e_k.
/// Default ridge: 1e-10 trace(G) / m. An explicitly zero ridge on a
/// numerically singular system raises ConditioningError.
AdaptedProcess solve_Y_galerkin(const GalerkinBasis& basis, const AdaptedProcess& f,
                                const Matrix& terminal, std::optional<double> ridge = std::nullopt,
                                GalerkinInfo* info = nullptr);

} // namespace bsde

#endif
