#include "palmroi/image_io.hpp"

#include <fstream>
#include <iterator>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "palmroi/errors.hpp"

namespace palmroi {

namespace {

Image from_bgr(const cv::Mat& bgr) {
  Image out(bgr.cols, bgr.rows);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      std::uint8_t* p = out.px(x, y);
      p[0] = row[x][2];
      p[1] = row[x][1];
      p[2] = row[x][0];
    }
  }
  return out;
}

cv::Mat to_bgr(const Image& img) {
  cv::Mat bgr(img.height, img.width, CV_8UC3);
  for (int y = 0; y < img.height; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.width; ++x) {
      const std::uint8_t* p = img.px(x, y);
      row[x] = cv::Vec3b(p[2], p[1], p[0]);
    }
  }
  return bgr;
}

}  // namespace

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw DataError("empty image payload");
  cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat bgr;
  try {
    bgr = cv::imdecode(buf, cv::IMREAD_COLOR);
  } catch (const cv::Exception& e) {
    throw DataError(std::string("cannot decode image: ") + e.what());
  }
  if (bgr.empty()) throw DataError("cannot decode image");
  return from_bgr(bgr);
}

Image read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read image " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), {}};
  try {
    return decode_image(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_image(const Image& img, const std::string& ext) {
  if (img.empty()) throw DataError("cannot encode an empty image");
  std::vector<std::uint8_t> out;
  std::vector<int> params;
  if (ext == ".jpg" || ext == ".jpeg") params = {cv::IMWRITE_JPEG_QUALITY, 95};
  try {
    if (!cv::imencode(ext, to_bgr(img), out, params)) throw DataError("cannot encode image as " + ext);
  } catch (const cv::Exception& e) {
    throw DataError(std::string("cannot encode image: ") + e.what());
  }
  return out;
}

void write_image(const Image& img, const std::filesystem::path& path) {
  const auto bytes = encode_image(img, path.extension().string());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write image " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace palmroi
