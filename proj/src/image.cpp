#include "axiscal/image.hpp"

#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>

namespace axiscal {

Eigen::VectorXd gaussian_kernel_1d(int ksize, double sigma) {
  Eigen::VectorXd w(ksize);
  const double half = (ksize - 1) * 0.5;
  for (int i = 0; i < ksize; ++i) {
    const double d = i - half;
    w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
  }
  return w / w.sum();
}

namespace {

// Weighted 1-D pass; border windows renormalized.
GrayImage weighted_pass(const GrayImage& src, const Eigen::VectorXd& w, int axis) {
  const Index rows = src.rows(), cols = src.cols();
  const Index half = (w.size() - 1) / 2;
  GrayImage out(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      double acc = 0.0, norm = 0.0;
      for (Index k = -half; k <= half; ++k) {
        const Index rr = axis == 0 ? r + k : r;
        const Index cc = axis == 1 ? c + k : c;
        if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
        acc += w[k + half] * src(rr, cc);
        norm += w[k + half];
      }
      out(r, c) = acc / norm;
    }
  }
  return out;
}

BitMask erode_pass(const BitMask& src, Index half, int axis) {
  const Index rows = src.rows(), cols = src.cols();
  BitMask out = BitMask::Constant(rows, cols, false);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      bool keep = src(r, c);
      for (Index k = -half; keep && k <= half; ++k) {
        const Index rr = axis == 0 ? r + k : r;
        const Index cc = axis == 1 ? c + k : c;
        keep = rr >= 0 && rr < rows && cc >= 0 && cc < cols && src(rr, cc);
      }
      out(r, c) = keep;
    }
  }
  return out;
}

// Felzenszwalb-Huttenlocher lower envelope of parabolas.
void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<Index>& v,
            std::vector<double>& z) {
  const Index n = static_cast<Index>(f.size());
  const double inf = std::numeric_limits<double>::infinity();
  Index k = 0;
  v[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  for (Index q = 1; q < n; ++q) {
    double s;
    while (true) {
      const Index p = v[k];
      s = ((f[q] + double(q * q)) - (f[p] + double(p * p))) / double(2 * q - 2 * p);
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (Index q = 0; q < n; ++q) {
    while (z[k + 1] < double(q)) ++k;
    const double dq = double(q - v[k]);
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

GrayImage separable_weighted_mean(const GrayImage& img, const Eigen::VectorXd& kernel) {
  if (kernel.size() % 2 == 0)
    throw Error(ErrorCode::InvalidArgument, "separable kernel must have odd length");
  // offsetting by a reference sample keeps constant images exact
  const double ref = img.size() ? img(0, 0) : 0.0;
  const GrayImage centered = img - ref;
  return weighted_pass(weighted_pass(centered, kernel, 1), kernel, 0) + ref;
}

GrayImage gaussian_local_mean(const GrayImage& img, int ksize) {
  return separable_weighted_mean(img, gaussian_kernel_1d(ksize, gaussian_sigma_for_ksize(ksize)));
}

BitMask adaptive_gaussian_threshold(const GrayImage& img, const ThresholdParams& params) {
  if (params.ksize < 3 || params.ksize % 2 == 0)
    throw Error(ErrorCode::InvalidArgument, "adaptive threshold: ksize must be odd and >= 3");
  if (img.rows() < params.ksize || img.cols() < params.ksize)
    throw Error(ErrorCode::ImageTooSmall, "adaptive threshold: image smaller than ksize");
  const GrayImage thr = gaussian_local_mean(img, params.ksize) - params.offset_c;
  return img > thr;
}

BitMask erode(const BitMask& mask, int se_size) {
  if (se_size < 1 || se_size % 2 == 0)
    throw Error(ErrorCode::InvalidArgument, "erode: structuring element must be odd and >= 1");
  const Index half = se_size / 2;
  if (half == 0) return mask;
  return erode_pass(erode_pass(mask, half, 1), half, 0);
}

BitMask largest_component(const BitMask& mask) {
  const Index rows = mask.rows(), cols = mask.cols();
  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> label =
      Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(rows, cols);
  int next = 0, best = 0;
  Index best_size = 0;
  std::vector<Index> stack;
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      if (!mask(r, c) || label(r, c)) continue;
      ++next;
      Index size = 0;
      stack.assign(1, r * cols + c);
      label(r, c) = next;
      while (!stack.empty()) {
        const Index p = stack.back();
        stack.pop_back();
        ++size;
        const Index pr = p / cols, pc = p % cols;
        for (Index dr = -1; dr <= 1; ++dr) {
          for (Index dc = -1; dc <= 1; ++dc) {
            const Index nr = pr + dr, nc = pc + dc;
            if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
            if (!mask(nr, nc) || label(nr, nc)) continue;
            label(nr, nc) = next;
            stack.push_back(nr * cols + nc);
          }
        }
      }
      if (size > best_size) {
        best_size = size;
        best = next;
      }
    }
  }
  if (best == 0) return BitMask::Constant(rows, cols, false);
  return label == best;
}

Eigen::ArrayXXd squared_distance_transform(const BitMask& mask) {
  const Index rows = mask.rows() + 2, cols = mask.cols() + 2;
  const double big = 1e20;
  Eigen::ArrayXXd grid = Eigen::ArrayXXd::Zero(rows, cols);
  for (Index r = 0; r < mask.rows(); ++r)
    for (Index c = 0; c < mask.cols(); ++c) grid(r + 1, c + 1) = mask(r, c) ? big : 0.0;

  const Index n = std::max(rows, cols);
  std::vector<double> f, d(n);
  std::vector<Index> v(n);
  std::vector<double> z(n + 1);
  f.reserve(n);
  for (Index c = 0; c < cols; ++c) {
    f.assign(grid.col(c).data(), grid.col(c).data() + rows);
    d.resize(rows);
    edt_1d(f, d, v, z);
    for (Index r = 0; r < rows; ++r) grid(r, c) = d[r];
  }
  for (Index r = 0; r < rows; ++r) {
    f.resize(cols);
    for (Index c = 0; c < cols; ++c) f[c] = grid(r, c);
    d.resize(cols);
    edt_1d(f, d, v, z);
    for (Index c = 0; c < cols; ++c) grid(r, c) = d[c];
  }
  return grid.block(1, 1, mask.rows(), mask.cols());
}

Circle largest_inscribed_circle(const BitMask& mask) {
  if (!mask.any()) throw Error(ErrorCode::NoForeground, "largest_inscribed_circle: empty mask");
  const BitMask component = largest_component(mask);
  const Eigen::ArrayXXd d2 = squared_distance_transform(component);
  double best = -1.0;
  Index br = 0, bc = 0;
  for (Index r = 0; r < component.rows(); ++r) {
    for (Index c = 0; c < component.cols(); ++c) {
      if (component(r, c) && d2(r, c) > best) {
        best = d2(r, c);
        br = r;
        bc = c;
      }
    }
  }
  return Circle{double(bc), double(br), std::max(0.0, std::sqrt(best) - 0.5)};
}

GrayImage decode_pgm(const std::string& bytes) {
  size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (next_token() != "P5") throw Error(ErrorCode::FormatError, "pgm: expected P5 magic");
  long w = 0, h = 0, maxval = 0;
  try {
    w = std::stol(next_token());
    h = std::stol(next_token());
    maxval = std::stol(next_token());
  } catch (const std::exception&) {
    throw Error(ErrorCode::FormatError, "pgm: malformed header");
  }
  if (w <= 0 || h <= 0) throw Error(ErrorCode::FormatError, "pgm: bad dimensions");
  if (maxval != 255) throw Error(ErrorCode::FormatError, "pgm: only maxval 255 is supported");
  ++pos;  // single whitespace byte before the raster
  if (bytes.size() < pos + size_t(w * h)) throw Error(ErrorCode::FormatError, "pgm: truncated raster");
  GrayImage img(h, w);
  for (long i = 0; i < w * h; ++i)
    img.data()[i] = static_cast<unsigned char>(bytes[pos + size_t(i)]) / 255.0;
  return img;
}

std::string encode_pgm(const GrayImage& img) {
  std::ostringstream out;
  out << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  std::string header = out.str();
  std::string raster(size_t(img.size()), '\0');
  for (Index i = 0; i < img.size(); ++i) {
    const double s = std::clamp(img.data()[i], 0.0, 1.0);
    raster[size_t(i)] = static_cast<char>(static_cast<unsigned char>(std::lround(s * 255.0)));
  }
  return header + raster;
}

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_pgm(buf.str());
}

void write_pgm(const std::string& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  const std::string bytes = encode_pgm(img);
  out.write(bytes.data(), std::streamsize(bytes.size()));
}

}  // namespace axiscal
