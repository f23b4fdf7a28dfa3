#include "gdsal/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "gdsal/config.hpp"
#include "gdsal/errors.hpp"

namespace gdsal {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

const char* kPalette[] = {"#1b6ca8", "#d1495b", "#66a182", "#edae49", "#7d5ba6", "#444444"};

std::string colour(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

// Plot area inside a 480 x 360 canvas.
constexpr double kLeft = 60, kTop = 20, kWidth = 400, kHeight = 280;

std::string axes(const std::string& xlabel, const std::string& ylabel) {
  std::ostringstream s;
  s << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kWidth
    << "\" height=\"" << kHeight << "\" fill=\"none\" stroke=\"#000\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double f = k / 5.0;
    const double x = kLeft + f * kWidth, y = kTop + kHeight - f * kHeight;
    s << "<text x=\"" << fixed(x) << "\" y=\"" << fixed(kTop + kHeight + 16)
      << "\" font-size=\"11\" text-anchor=\"middle\">" << fixed(f, 1) << "</text>\n";
    s << "<text x=\"" << fixed(kLeft - 6) << "\" y=\"" << fixed(y + 4)
      << "\" font-size=\"11\" text-anchor=\"end\">" << fixed(f, 1) << "</text>\n";
  }
  s << "<text x=\"" << fixed(kLeft + kWidth / 2) << "\" y=\"" << fixed(kTop + kHeight + 34)
    << "\" font-size=\"12\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  s << "<text x=\"16\" y=\"" << fixed(kTop + kHeight / 2)
    << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << fixed(kTop + kHeight / 2) << ")\">" << ylabel << "</text>\n";
  return s.str();
}

}  // namespace

void write_curve_csv(const std::filesystem::path& path, const PRCurve& curve,
                     double beta2) {
  auto out = open_out(path);
  out << "cutoff,precision,recall,f_beta,valid\n";
  for (const PRPoint& p : curve.points) {
    out << p.cutoff << ',' << format_double(p.precision) << ','
        << format_double(p.recall) << ','
        << format_double(p.valid ? f_beta(p.precision, p.recall, beta2) : 0.0) << ','
        << (p.valid ? 1 : 0) << '\n';
  }
}

void write_mean_curve_csv(const std::filesystem::path& path, const EvalReport& r) {
  auto out = open_out(path);
  out << "cutoff,precision,recall,f_beta\n";
  for (const MeanCurvePoint& p : r.mean_curve) {
    out << p.cutoff << ',' << format_double(p.precision) << ','
        << format_double(p.recall) << ','
        << format_double(f_beta(p.precision, p.recall, r.beta2)) << '\n';
  }
}

void write_per_image_csv(const std::filesystem::path& path, const EvalReport& r) {
  auto out = open_out(path);
  const bool seg = !r.seg_ids.empty();
  out << "id,max_f_beta" << (seg ? ",segmentation_f_beta" : "") << '\n';
  std::size_t j = 0;
  for (std::size_t i = 0; i < r.ids.size(); ++i) {
    out << r.ids[i] << ',' << format_double(r.max_f[i]);
    if (seg) {
      out << ',';
      if (j < r.seg_ids.size() && r.seg_ids[j] == r.ids[i]) out << format_double(r.seg_f[j++]);
    }
    out << '\n';
  }
}

void write_comparison_csv(const std::filesystem::path& path,
                          const std::vector<EvalReport>& reports) {
  auto out = open_out(path);
  out << "method,images,mean_max_f_beta,segmented_images,mean_segmentation_f_beta\n";
  for (const EvalReport& r : reports) {
    out << r.method << ',' << r.ids.size() << ',' << format_double(r.mean_max_f) << ','
        << r.seg_ids.size() << ',';
    if (!r.seg_ids.empty()) out << format_double(r.mean_seg_f);
    out << '\n';
  }
}

void write_pr_svg(const std::filesystem::path& path, const std::vector<EvalReport>& reports) {
  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"360\">\n"
      << "<rect width=\"480\" height=\"360\" fill=\"#fff\"/>\n"
      << axes("recall", "precision");
  for (std::size_t m = 0; m < reports.size(); ++m) {
    out << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << colour(m) << "\" points=\"";
    bool first = true;
    for (const MeanCurvePoint& p : reports[m].mean_curve) {
      if (p.precision == 0.0 && p.recall == 0.0) continue;
      out << (first ? "" : " ") << fixed(kLeft + p.recall * kWidth) << ','
          << fixed(kTop + kHeight - p.precision * kHeight);
      first = false;
    }
    out << "\"/>\n";
    out << "<text x=\"" << fixed(kLeft + kWidth - 8) << "\" y=\"" << fixed(kTop + 16 + 14.0 * m)
        << "\" font-size=\"11\" text-anchor=\"end\" fill=\"" << colour(m) << "\">"
        << reports[m].method << "</text>\n";
  }
  out << "</svg>\n";
}

void write_fbeta_svg(const std::filesystem::path& path,
                     const std::vector<EvalReport>& reports) {
  struct Bar {
    std::string label;
    double value;
  };
  std::vector<Bar> bars;
  for (const EvalReport& r : reports) {
    bars.push_back({r.method + " max-F", r.mean_max_f});
    if (!r.seg_ids.empty()) bars.push_back({r.method + " seg-F", r.mean_seg_f});
  }
  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"360\">\n"
      << "<rect width=\"480\" height=\"360\" fill=\"#fff\"/>\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" fill=\"none\" stroke=\"#000\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double f = k / 5.0;
    out << "<text x=\"" << fixed(kLeft - 6) << "\" y=\"" << fixed(kTop + kHeight - f * kHeight + 4)
        << "\" font-size=\"11\" text-anchor=\"end\">" << fixed(f, 1) << "</text>\n";
  }
  const double slot = bars.empty() ? kWidth : kWidth / static_cast<double>(bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double h = bars[i].value * kHeight;
    const double x = kLeft + slot * i + slot * 0.15;
    out << "<rect x=\"" << fixed(x) << "\" y=\"" << fixed(kTop + kHeight - h) << "\" width=\""
        << fixed(slot * 0.7) << "\" height=\"" << fixed(h) << "\" fill=\"" << colour(i) << "\"/>\n";
    out << "<text x=\"" << fixed(x + slot * 0.35) << "\" y=\"" << fixed(kTop + kHeight - h - 4)
        << "\" font-size=\"10\" text-anchor=\"middle\">" << fixed(bars[i].value, 3) << "</text>\n";
    out << "<text x=\"" << fixed(x + slot * 0.35) << "\" y=\"" << fixed(kTop + kHeight + 16)
        << "\" font-size=\"9\" text-anchor=\"middle\">" << bars[i].label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace gdsal
