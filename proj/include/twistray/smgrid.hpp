#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "twistray/chart.hpp"
#include "twistray/lambda.hpp"

namespace twistray {

struct GridSpec {
    int nx = 32, ny = 32, ntheta = 32;  // ntheta must be even
    // bounding box; if x0 >= x1 the emitter bounding box (padded) is used
    double x0 = 1, x1 = -1, y0 = 1, y1 = -1;
    int n_boundary = 0;  // ring resolution; 0 = derived from nx, ny
};

// Tensor discretization of SM: cell-centered (x_i, y_j) grid times a
// uniform periodic fiber grid theta_k = k dtheta. Cells cut by the
// boundary carry the area fraction of the cell inside M (linearized cut,
// clipped polygon) and are sampled at the clipped centroid; the Liouville
// weight is e^{2 phi} frac dx dy per cell and dtheta per fiber node.
class SMGrid {
  public:
    SMGrid(const Chart& chart, const GridSpec& spec);

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int ntheta() const { return nth_; }
    double dx() const { return dx_; }
    double dy() const { return dy_; }
    double dtheta() const { return dth_; }

    int cell_count() const { return nx_ * ny_; }
    std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_ * nth_; }
    int cell(int i, int j) const { return j * nx_ + i; }
    std::size_t idx(int i, int j, int k) const {
        return (static_cast<std::size_t>(j) * nx_ + i) * nth_ + k;
    }

    double x_of(int i) const { return x0_ + (i + 0.5) * dx_; }
    double y_of(int j) const { return y0_ + (j + 0.5) * dy_; }
    double theta_of(int k) const { return k * dth_; }

    // quadrature data per cell
    double frac(int c) const { return frac_[c]; }
    Vec2 qpoint(int c) const { return qpoint_[c]; }
    double weight2(int c) const { return w2_[c]; }      // e^{2phi} frac dx dy
    double weight_area(int c) const { return wa_[c]; }  // frac dx dy

    bool inside_node(int i, int j) const { return inside_[cell(i, j)] != 0; }
    bool body_node(int i, int j) const { return body_[cell(i, j)] != 0; }

    // integral over SM of a sampled function (Liouville measure)
    double integrate(const std::vector<double>& u) const;
    // integral over M (2D) of a per-cell sampled function
    double integrate2(const std::vector<double>& f) const;

    // Boundary rings with rho-symmetric fiber grids: the fiber at node m is
    // theta(m, k) = psi_m + (k + 1/2) dtheta_b, so the reflection maps node
    // k to n/2 - 1 - k exactly.
    struct Ring {
        BoundaryId id;
        int n_s = 0, n_th = 0;
        double dp = 0, dth = 0;
        std::vector<Vec2> point;
        std::vector<Vec2> dpoint;  // d point / d p
        std::vector<double> psi;   // inward normal angle
        std::vector<double> ws;    // g-arclength weight per node
        std::vector<double> kappa;

        double theta(int m, int k) const { return psi[m] + (k + 0.5) * dth; }
        int reflect_index(int k) const {
            const int r = (n_th / 2 - 1 - k) % n_th;
            return r < 0 ? r + n_th : r;
        }
    };
    const Ring& ring(BoundaryId id) const {
        return id == BoundaryId::Emitter ? emitter_ : reflector_;
    }

    // total boundary measure: sum over rings of ws * dth per fiber node
    double boundary_measure() const;

  private:
    int nx_, ny_, nth_;
    double x0_, y0_, dx_, dy_, dth_;
    std::vector<double> frac_, w2_, wa_;
    std::vector<Vec2> qpoint_;
    std::vector<std::uint8_t> inside_, body_;
    Ring emitter_, reflector_;
};

}  // namespace twistray
