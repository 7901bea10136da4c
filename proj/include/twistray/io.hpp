#pragma once

#include <string>
#include <vector>

#include "twistray/jacobi.hpp"
#include "twistray/ray.hpp"
#include "twistray/transform.hpp"

namespace twistray {

// All file output is byte-stable: doubles are printed with %.17g and rows
// in a fixed order, so identical inputs give identical files regardless of
// the worker count.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);

// Ray CSV: ray, t, x, y, theta, segment_id (one block of rows per ray).
std::string rays_csv(const std::vector<BrokenRay>& rays);

// Events CSV: ray, t, x, y, theta_in, theta_out, normal_component.
std::string events_csv(const std::vector<BrokenRay>& rays);

// Jacobi CSV: ray, t, a, b, c, Jx, Jy, DJx, DJy, segment_id.
std::string jacobi_csv(const std::vector<JacobiPath>& paths);

// Sinogram CSV: s, chi, value (exited rays only).
std::string sinogram_csv(const std::vector<SinogramRow>& rows);

// Minimal SVG overlay: boundary components plus ray polylines.
std::string rays_svg(const Chart& chart, const std::vector<BrokenRay>& rays, int size_px = 720);

// Binary matrix file: 8-byte magic "TWRMAT01", int64 rows, int64 cols,
// row-major float64 payload.
void write_matrix_file(const std::string& path, const double* data, std::int64_t rows,
                       std::int64_t cols);

}  // namespace twistray
