#include "twistray/io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>

#include "twistray/errors.hpp"

namespace twistray {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    out << content;
}

std::string rays_csv(const std::vector<BrokenRay>& rays) {
    std::string s = "ray,t,x,y,theta,segment_id\n";
    for (std::size_t r = 0; r < rays.size(); ++r) {
        for (std::size_t si = 0; si < rays[r].segments.size(); ++si) {
            for (const auto& smp : rays[r].segments[si]) {
                s += std::to_string(r) + ',' + format_double(smp.t) + ',' +
                     format_double(smp.state.x) + ',' + format_double(smp.state.y) + ',' +
                     format_double(smp.state.theta) + ',' + std::to_string(si) + '\n';
            }
        }
    }
    return s;
}

std::string events_csv(const std::vector<BrokenRay>& rays) {
    std::string s = "ray,t,x,y,theta_in,theta_out,normal_component\n";
    for (std::size_t r = 0; r < rays.size(); ++r) {
        for (const auto& ev : rays[r].events) {
            s += std::to_string(r) + ',' + format_double(ev.t) + ',' + format_double(ev.x) +
                 ',' + format_double(ev.y) + ',' + format_double(ev.theta_in) + ',' +
                 format_double(ev.theta_out) + ',' + format_double(ev.normal_component) + '\n';
        }
    }
    return s;
}

std::string jacobi_csv(const std::vector<JacobiPath>& paths) {
    std::string s = "ray,t,a,b,c,Jx,Jy,DJx,DJy,segment_id\n";
    for (std::size_t r = 0; r < paths.size(); ++r) {
        const auto& p = paths[r];
        for (std::size_t si = 0; si < p.t.size(); ++si) {
            for (std::size_t i = 0; i < p.t[si].size(); ++i) {
                const auto& f = p.frames[si][i];
                const auto& jv = p.vectors[si][i];
                s += std::to_string(r) + ',' + format_double(p.t[si][i]) + ',' +
                     format_double(f.a) + ',' + format_double(f.b) + ',' + format_double(f.c) +
                     ',' + format_double(jv.J.x) + ',' + format_double(jv.J.y) + ',' +
                     format_double(jv.DJ.x) + ',' + format_double(jv.DJ.y) + ',' +
                     std::to_string(si) + '\n';
            }
        }
    }
    return s;
}

std::string sinogram_csv(const std::vector<SinogramRow>& rows) {
    std::string s = "s,chi,value\n";
    for (const auto& row : rows) {
        if (row.status != RayStatus::Exited) continue;
        s += format_double(row.s) + ',' + format_double(row.chi) + ',' +
             format_double(row.value) + '\n';
    }
    return s;
}

std::string rays_svg(const Chart& chart, const std::vector<BrokenRay>& rays, int size_px) {
    const double R = chart.component(BoundaryId::Emitter).max_radius() * 1.05;
    const double scale = size_px / (2.0 * R);
    auto px = [&](double x) { return format_double((x + R) * scale); };
    auto py = [&](double y) { return format_double((R - y) * scale); };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(size_px) +
         "\" height=\"" + std::to_string(size_px) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (BoundaryId id : {BoundaryId::Emitter, BoundaryId::Reflector}) {
        const auto& comp = chart.component(id);
        s += "<polygon points=\"";
        for (int k = 0; k < 256; ++k) {
            const Vec2 q = comp.point(2 * 3.14159265358979323846 * k / 256);
            s += px(q.x) + ',' + py(q.y) + ' ';
        }
        s += std::string("\" fill=\"none\" stroke=\"") +
             (id == BoundaryId::Emitter ? "black" : "gray") + "\" stroke-width=\"2\"/>\n";
    }
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    for (std::size_t r = 0; r < rays.size(); ++r) {
        for (const auto& seg : rays[r].segments) {
            s += "<polyline points=\"";
            const std::size_t stride = seg.size() > 400 ? seg.size() / 400 : 1;
            for (std::size_t i = 0; i < seg.size(); i += stride) {
                s += px(seg[i].state.x) + ',' + py(seg[i].state.y) + ' ';
            }
            if ((seg.size() - 1) % stride != 0) {
                s += px(seg.back().state.x) + ',' + py(seg.back().state.y);
            }
            s += std::string("\" fill=\"none\" stroke=\"") + colors[r % 6] +
                 "\" stroke-width=\"1\"/>\n";
        }
    }
    s += "</svg>\n";
    return s;
}

void write_matrix_file(const std::string& path, const double* data, std::int64_t rows,
                       std::int64_t cols) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    const char magic[8] = {'T', 'W', 'R', 'M', 'A', 'T', '0', '1'};
    out.write(magic, 8);
    out.write(reinterpret_cast<const char*>(&rows), 8);
    out.write(reinterpret_cast<const char*>(&cols), 8);
    out.write(reinterpret_cast<const char*>(data), rows * cols * 8);
}

}  // namespace twistray
