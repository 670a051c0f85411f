#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "veinseg/trainer.hpp"

namespace veinseg {

namespace {
constexpr const char* kHistoryHeader = "epoch,train_loss,val_loss,val_acc,val_tpr,val_tnr,seconds";

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}
}  // namespace

void export_history(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
  std::string text = std::string(kHistoryHeader) + "\n";
  char line[256];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch,
                  r.train_loss, r.val_loss, r.val_acc, r.val_tpr, r.val_tnr, r.seconds);
    text += line;
  }
  write_text(text, path);
}

std::vector<EpochRecord> read_history(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read history '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != kHistoryHeader) {
    throw FormatError("'" + path.string() + "' is not a history CSV");
  }
  std::vector<EpochRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochRecord r;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf,%lf", &r.epoch, &r.train_loss,
                    &r.val_loss, &r.val_acc, &r.val_tpr, &r.val_tnr, &r.seconds) != 7) {
      throw FormatError("malformed history row: " + line);
    }
    out.push_back(r);
  }
  return out;
}

std::string curves_svg(const std::vector<EpochRecord>& history) {
  constexpr double kChartW = 360, kChartH = 240, kLeft = 56, kTop = 36, kGap = 90;
  std::ostringstream os;
  char buf[256];
  auto fmt = [&](const char* f, auto... args) {
    std::snprintf(buf, sizeof buf, f, args...);
    os << buf;
  };
  const double width = 2 * (kLeft + kChartW) + kGap;
  const double height = kTop + kChartH + 60;
  fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
      "viewBox=\"0 0 %.0f %.0f\" font-family=\"sans-serif\" font-size=\"12\">\n",
      width, height, width, height);
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  const int first = history.empty() ? 1 : history.front().epoch;
  const int last = history.empty() ? 1 : history.back().epoch;

  auto chart = [&](double x0, const char* title, const char* ylabel, const char* color,
                   auto value) {
    double lo = 0, hi = 1;
    if (!history.empty()) {
      lo = hi = value(history.front());
      for (const auto& r : history) {
        lo = std::min(lo, value(r));
        hi = std::max(hi, value(r));
      }
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    auto px = [&](int epoch) {
      return last == first ? x0 + kChartW / 2
                           : x0 + kChartW * (epoch - first) / static_cast<double>(last - first);
    };
    auto py = [&](double v) { return kTop + kChartH * (1.0 - (v - lo) / (hi - lo)); };
    fmt("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" font-size=\"14\">%s</text>\n",
        x0 + kChartW / 2, kTop - 14, title);
    fmt("<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
        "stroke=\"black\"/>\n",
        x0, kTop, kChartW, kChartH);
    fmt("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">epoch</text>\n", x0 + kChartW / 2,
        kTop + kChartH + 36);
    fmt("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" transform=\"rotate(-90 %.1f %.1f)\">"
        "%s</text>\n",
        x0 - 42, kTop + kChartH / 2, x0 - 42, kTop + kChartH / 2, ylabel);
    fmt("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%d</text>\n", x0, kTop + kChartH + 16,
        first);
    fmt("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%d</text>\n", x0 + kChartW,
        kTop + kChartH + 16, last);
    fmt("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.4g</text>\n", x0 - 4, kTop + 4, hi);
    fmt("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.4g</text>\n", x0 - 4, kTop + kChartH,
        lo);
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < history.size(); ++k) {
      fmt("%s%.2f,%.2f", k == 0 ? "" : " ", px(history[k].epoch), py(value(history[k])));
    }
    os << "\"/>\n";
  };
  chart(kLeft, "Training loss", "dice loss", "#d62728",
        [](const EpochRecord& r) { return r.train_loss; });
  chart(2 * kLeft + kChartW + kGap, "Validation accuracy", "accuracy", "#1f77b4",
        [](const EpochRecord& r) { return r.val_acc; });
  os << "</svg>\n";
  return os.str();
}

void render_curves(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
  write_text(curves_svg(history), path);
}

}  // namespace veinseg
