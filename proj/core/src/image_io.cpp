#include "sledge/image_io.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <fstream>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <sstream>

#include "sledge/error.hpp"

namespace sledge {

namespace {

const std::vector<int> kPngParams = {cv::IMWRITE_PNG_COMPRESSION, 6};

std::string encode(const cv::Mat& mat) {
  std::vector<std::uint8_t> buf;
  if (!cv::imencode(".png", mat, buf, kPngParams)) {
    throw Error(ErrorCode::io, "PNG encoding failed");
  }
  return {buf.begin(), buf.end()};
}

cv::Mat decode(std::string_view bytes) {
  if (bytes.empty()) throw Error(ErrorCode::corrupt_document, "empty PNG data");
  const cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8UC1,
                    const_cast<char*>(bytes.data()));
  cv::Mat img = cv::imdecode(raw, cv::IMREAD_UNCHANGED);
  if (img.empty()) throw Error(ErrorCode::corrupt_document, "undecodable image data");
  if (img.depth() == CV_16U) {
    cv::Mat eight;
    img.convertTo(eight, CV_8U, 1.0 / 257.0);
    img = eight;
  }
  if (img.depth() != CV_8U) throw Error(ErrorCode::corrupt_document, "unsupported PNG bit depth");
  return img;
}

}  // namespace

std::string encode_png(const Canvas& canvas) {
  const cv::Mat rgba(canvas.height(), canvas.width(), CV_8UC4,
                     const_cast<std::uint8_t*>(canvas.pixels().data()));
  cv::Mat bgra;
  cv::cvtColor(rgba, bgra, cv::COLOR_RGBA2BGRA);
  return encode(bgra);
}

Canvas decode_png(std::string_view bytes) {
  const cv::Mat img = decode(bytes);
  cv::Mat rgba;
  switch (img.channels()) {
    case 1: cv::cvtColor(img, rgba, cv::COLOR_GRAY2RGBA); break;
    case 3: cv::cvtColor(img, rgba, cv::COLOR_BGR2RGBA); break;
    case 4: cv::cvtColor(img, rgba, cv::COLOR_BGRA2RGBA); break;
    default: throw Error(ErrorCode::corrupt_document, "unsupported PNG channel count");
  }
  const auto* p = rgba.ptr<std::uint8_t>();
  return Canvas(rgba.cols, rgba.rows, std::vector<std::uint8_t>(p, p + rgba.total() * 4));
}

std::string encode_mask_png(const Mask& mask) {
  cv::Mat grey(mask.height(), mask.width(), CV_8UC1);
  const auto values = mask.values();
  for (std::size_t i = 0; i < values.size(); ++i) grey.data[i] = values[i] ? 255 : 0;
  return encode(grey);
}

Mask decode_mask_png(std::string_view bytes) {
  const cv::Mat img = decode(bytes);
  if (img.channels() != 1) throw Error(ErrorCode::corrupt_document, "mask PNG must be greyscale");
  std::vector<std::uint8_t> values(img.total());
  const cv::Mat cont = img.isContinuous() ? img : img.clone();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint8_t v = cont.data[i];
    if (v != 0 && v != 255) {
      throw Error(ErrorCode::corrupt_document,
                  "mask PNG value " + std::to_string(v) + " is not 0 or 255");
    }
    values[i] = v ? 1 : 0;
  }
  return Mask(img.cols, img.rows, std::move(values));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::not_found, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::io, "short write to " + path.string());
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[SHA256_DIGEST_LENGTH];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 15]);
  }
  return out;
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error(ErrorCode::protocol, "base64 length not a multiple of 4");
  std::string out(3 * text.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw Error(ErrorCode::protocol, "invalid base64");
  std::size_t len = static_cast<std::size_t>(n);
  if (!text.empty() && text.back() == '=') --len;
  if (text.size() > 1 && text[text.size() - 2] == '=') --len;
  out.resize(len);
  return out;
}

}  // namespace sledge
