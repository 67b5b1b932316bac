// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "mtvae/render.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mtvae {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

void check_2d(const MotionSequence& seq) {
  if (seq.dim() % 2 != 0 || seq.dim() < 2) {
    throw std::invalid_argument("render: frame width " + std::to_string(seq.dim()) +
                                " is not a 2D keypoint layout");
  }
}

double px(double v, double size) { return (v + 1.0) * 0.5 * size; }

void draw_frame(std::ostringstream& os, const MotionSequence& seq, std::int64_t t, double ox,
                const RenderOptions& opt) {
  const std::int64_t joints = seq.dim() / 2;
  const double s = opt.frame_px;
  os << "<rect x=\"" << ox << "\" y=\"0\" width=\"" << s << "\" height=\"" << s
     << "\" fill=\"white\" stroke=\"#cccccc\"/>\n";
  for (std::int64_t j = 0; j < joints; ++j) {
    const char* color = kPalette[j % 6];
    if (opt.trajectory && t > 0) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-opacity=\"0.35\" points=\"";
      for (std::int64_t u = 0; u <= t; ++u) {
        os << ox + px(seq.frames[u * seq.dim() + 2 * j], s) << ","
           << s - px(seq.frames[u * seq.dim() + 2 * j + 1], s) << " ";
      }
      os << "\"/>\n";
    }
    os << "<circle cx=\"" << ox + px(seq.frames[t * seq.dim() + 2 * j], s) << "\" cy=\""
       << s - px(seq.frames[t * seq.dim() + 2 * j + 1], s) << "\" r=\"" << opt.point_radius << "\" fill=\""
       << color << "\"/>\n";
  }
}

void write_svg(const std::string& path, double width, double height, const std::string& body) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
     << body << "</svg>\n";
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw std::runtime_error("render: cannot open '" + tmp + "'");
    f << os.str();
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

void render_frames(const MotionSequence& seq, const std::string& out_dir, const RenderOptions& opt) {
  check_2d(seq);
  std::filesystem::create_directories(out_dir);
  for (std::int64_t t = 0; t < seq.length(); ++t) {
    std::ostringstream body;
    draw_frame(body, seq, t, 0.0, opt);
    char name[64];
    std::snprintf(name, sizeof(name), "frame_%04lld.svg", static_cast<long long>(t));
    write_svg(out_dir + "/" + name, opt.frame_px, opt.frame_px, body.str());
  }
}

void render_strip(const MotionSequence& seq, const std::string& out_path, const RenderOptions& opt) {
  check_2d(seq);
  std::ostringstream body;
  for (std::int64_t t = 0; t < seq.length(); ++t) {
    draw_frame(body, seq, t, static_cast<double>(t) * opt.frame_px, opt);
  }
  write_svg(out_path, static_cast<double>(seq.length()) * opt.frame_px, opt.frame_px, body.str());
}

}  // namespace mtvae
