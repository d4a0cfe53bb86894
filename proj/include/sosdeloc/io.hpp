#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "spinwave.hpp"

namespace sosdeloc {

using json = nlohmann::json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OutputFormat { Csv, Json };

// Shortest round-trippable text for a double; fixed so reruns are byte-identical.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

using Cell = std::variant<long long, double, std::string, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw std::logic_error("row width does not match the header");
    rows.push_back(std::move(row));
  }
};

inline std::string cell_text(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) return format_double(v);
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else if constexpr (std::is_same_v<T, long long>) return std::to_string(v);
        else return v;
      },
      c);
}

inline json cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(v)) return format_double(v);
          return v;
        } else {
          return v;
        }
      },
      c);
}

inline std::string to_csv(const Table& t) {
  std::ostringstream os;
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  };
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << quote(t.columns[i]);
  os << "\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << quote(cell_text(r[i]));
    os << "\n";
  }
  return os.str();
}

inline json to_json(const Table& t) {
  json arr = json::array();
  for (const auto& r : t.rows) {
    json o = json::object();
    for (std::size_t i = 0; i < r.size(); ++i) o[t.columns[i]] = cell_json(r[i]);
    arr.push_back(std::move(o));
  }
  return arr;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw IoError("write failed for " + path.string());
}

// Writes <dir>/<stem>.csv or <dir>/<stem>.json and returns the path.
inline std::filesystem::path write_table(const std::filesystem::path& dir, const std::string& stem, const Table& t,
                                         OutputFormat fmt) {
  const auto path = dir / (stem + (fmt == OutputFormat::Csv ? ".csv" : ".json"));
  write_text(path, fmt == OutputFormat::Csv ? to_csv(t) : to_json(t).dump(2) + "\n");
  return path;
}

// ---------------------------------------------------------------- SVG

struct PlotSeries {
  std::string name;
  std::vector<double> x, y, yerr;
  std::string color = "#1f77b4";
};

inline std::string svg_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

// Scatter-and-line plot; x is drawn on a log scale when logx is set (the ln N axis of growth plots).
inline std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                            const std::vector<PlotSeries>& series, bool logx) {
  const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 60;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  auto tx = [&](double x) { return logx ? std::log(x) : x; };
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double e = i < s.yerr.size() ? s.yerr[i] : 0.0;
      xmin = std::min(xmin, tx(s.x[i]));
      xmax = std::max(xmax, tx(s.x[i]));
      ymin = std::min(ymin, s.y[i] - e);
      ymax = std::max(ymax, s.y[i] + e);
    }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  const double pad = 0.08 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  auto px = [&](double x) { return L + (tx(x) - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << " " << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
     << svg_escape(title) << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double y = ymin + (ymax - ymin) * k / 4.0;
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
       << format_double(std::round(y * 1000.0) / 1000.0) << "</text>\n";
  }
  for (const auto& s : series)
    for (double x : s.x)
      os << "<text x=\"" << px(x) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
         << format_double(x) << "</text>\n";
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
     << svg_escape(xlabel) << "</text>\n";
  os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 16 "
     << (T + H - B) / 2 << ")\">" << svg_escape(ylabel) << "</text>\n";
  int legend = 0;
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << (i ? " " : "") << px(s.x[i]) << "," << py(s.y[i]);
    os << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
      if (i < s.yerr.size() && s.yerr[i] > 0.0)
        os << "<line x1=\"" << px(s.x[i]) << "\" y1=\"" << py(s.y[i] - s.yerr[i]) << "\" x2=\"" << px(s.x[i]) << "\" y2=\""
           << py(s.y[i] + s.yerr[i]) << "\" stroke=\"" << s.color << "\"/>\n";
    }
    os << "<text x=\"" << L + 10 << "\" y=\"" << T + 14 + 16 * legend++ << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
       << s.color << "\">" << svg_escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// Diverging heat map of a spin wave over its stored rectangle.
inline std::string svg_heatmap(const SpinWave& w, const std::string& title) {
  if (w.empty()) return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"10\" height=\"10\"/>\n";
  double m = 0.0;
  w.for_each_site([&](Site, double v) { m = std::max(m, std::abs(v)); });
  if (m == 0.0) m = 1.0;
  const double cell = std::max(1.0, std::min(12.0, 600.0 / static_cast<double>(std::max(w.width(), w.height()))));
  const double Wd = cell * static_cast<double>(w.width()), Hd = cell * static_cast<double>(w.height()) + 30;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Wd << "\" height=\"" << Hd << "\">\n";
  os << "<text x=\"4\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">" << svg_escape(title) << "</text>\n";
  w.for_each_site([&](Site s, double v) {
    const double t = v / m;
    const int r = t < 0 ? static_cast<int>(255 * (1 + t)) : 255, b = t > 0 ? static_cast<int>(255 * (1 - t)) : 255;
    const int g = static_cast<int>(255 * (1 - std::abs(t)));
    char col[8];
    std::snprintf(col, sizeof col, "#%02x%02x%02x", b, g, r);
    os << "<rect x=\"" << cell * static_cast<double>(s.x - w.lo().x) << "\" y=\""
       << 30 + cell * static_cast<double>(w.hi().y - s.y) << "\" width=\"" << cell << "\" height=\"" << cell
       << "\" fill=\"" << col << "\"/>\n";
  });
  os << "</svg>\n";
  return os.str();
}

}  // namespace sosdeloc
