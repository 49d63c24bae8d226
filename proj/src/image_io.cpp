#include "skd/image_io.hpp"

#include "skd/error.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace skd {

namespace {

cv::Mat decode(const std::string& path, int flags) {
  cv::Mat m = cv::imread(path, flags);
  if (m.empty()) throw DataError("cannot decode image '" + path + "'");
  return m;
}

Tensorf gray_tensor(const cv::Mat& m) {
  cv::Mat g;
  m.convertTo(g, CV_8U);
  Tensorf out(Shape{1, 1, g.rows, g.cols});
  for (int y = 0; y < g.rows; ++y)
    for (int x = 0; x < g.cols; ++x) out.at(0, 0, y, x) = float(g.at<std::uint8_t>(y, x)) / 255.0f;
  return out;
}

void encode(const std::string& path, const cv::Mat& m) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  if (!cv::imwrite(path, m)) throw DataError("cannot write image '" + path + "'");
}

}  // namespace

std::uint8_t quantize8(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return std::uint8_t(std::floor(double(c) * 255.0 + 0.5));
}

Tensorf read_rgb(const std::string& path) {
  cv::Mat m = decode(path, cv::IMREAD_COLOR);
  Tensorf out(Shape{1, 3, m.rows, m.cols});
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x) {
      const auto& px = m.at<cv::Vec3b>(y, x);
      for (int c = 0; c < 3; ++c) out.at(0, c, y, x) = float(px[2 - c]) / 255.0f;
    }
  return out;
}

Tensorf read_gray(const std::string& path) { return gray_tensor(decode(path, cv::IMREAD_GRAYSCALE)); }

Tensorf read_mask(const std::string& path) {
  cv::Mat m = decode(path, cv::IMREAD_GRAYSCALE);
  Tensorf out(Shape{1, 1, m.rows, m.cols});
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x) out.at(0, 0, y, x) = m.at<std::uint8_t>(y, x) >= 128 ? 1.0f : 0.0f;
  return out;
}

void write_gray8(const std::string& path, const Tensorf& map) {
  const Shape s = map.shape();
  cv::Mat m(s.h, s.w, CV_8U);
  for (int y = 0; y < s.h; ++y)
    for (int x = 0; x < s.w; ++x) m.at<std::uint8_t>(y, x) = quantize8(map.at(0, 0, y, x));
  encode(path, m);
}

void write_rgb8(const std::string& path, const Tensorf& rgb) {
  const Shape s = rgb.shape();
  if (s.c != 3) throw ShapeError("write_rgb8: expected 3 channels, got " + std::to_string(s.c));
  cv::Mat m(s.h, s.w, CV_8UC3);
  for (int y = 0; y < s.h; ++y)
    for (int x = 0; x < s.w; ++x)
      for (int c = 0; c < 3; ++c) m.at<cv::Vec3b>(y, x)[2 - c] = quantize8(rgb.at(0, c, y, x));
  encode(path, m);
}

}  // namespace skd
