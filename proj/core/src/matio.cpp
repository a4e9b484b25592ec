#include "laros/matio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <string>

#include "laros/errors.hpp"

namespace laros {

namespace {

std::string_view trimmed(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_field(std::string_view field, const std::filesystem::path& path) {
  field = trimmed(field);
  double value = 0.0;
  const auto [end, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || end != field.data() + field.size() ||
      !std::isfinite(value)) {
    throw IoError(path.string() + ": bad numeric field '" + std::string(field) +
                  "'");
  }
  return value;
}

// Header token reader shared by the two PGM variants: skips whitespace and
// '#' comments.
std::string pgm_token(std::istream& in, const std::filesystem::path& path) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF) throw IoError(path.string() + ": truncated header");
  std::string tok(1, static_cast<char>(c));
  while ((c = in.peek()) != EOF && !std::isspace(c) && c != '#') {
    tok += static_cast<char>(in.get());
  }
  return tok;
}

int pgm_int(std::istream& in, const std::filesystem::path& path) {
  const std::string tok = pgm_token(in, path);
  int value = 0;
  const auto [end, ec] =
      std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc{} || end != tok.data() + tok.size()) {
    throw IoError(path.string() + ": bad header number '" + tok + "'");
  }
  return value;
}

}  // namespace

Matrix read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trimmed(line).empty()) continue;
    std::vector<double> row;
    std::string_view rest = line;
    while (true) {
      const std::size_t comma = rest.find(',');
      row.push_back(parse_field(rest.substr(0, comma), path));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError(path.string() + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path.string() + ": no data");
  Matrix m(rows.size(), rows.front().size());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void write_csv(const std::filesystem::path& path, const Matrix& m) {
  require_finite(m, "write_csv");
  std::ofstream out(path);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      if (j > 0) out.put(',');
      out << buf;
    }
    out.put('\n');
  }
  out.flush();
  if (!out) throw IoError(path.string() + ": write failed");
}

Matrix read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open");
  const std::string magic = pgm_token(in, path);
  if (magic != "P5" && magic != "P2") {
    throw IoError(path.string() + ": not a PGM file");
  }
  const int cols = pgm_int(in, path);
  const int rows = pgm_int(in, path);
  const int maxval = pgm_int(in, path);
  if (rows < 1 || cols < 1) throw IoError(path.string() + ": bad dimensions");
  if (maxval < 1 || maxval > 255) {
    throw IoError(path.string() + ": unsupported maxval");
  }

  Matrix m(rows, cols);
  if (magic == "P5") {
    in.get();  // the single whitespace byte separating header from data
    std::vector<unsigned char> bytes(static_cast<std::size_t>(rows) * cols);
    in.read(reinterpret_cast<char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
      throw IoError(path.string() + ": truncated pixel data");
    }
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        m(r, c) = bytes[static_cast<std::size_t>(r) * cols + c];
      }
    }
  } else {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) m(r, c) = pgm_int(in, path);
    }
  }
  if ((m.array() > maxval).any() || (m.array() < 0).any()) {
    throw IoError(path.string() + ": sample above maxval");
  }
  return m;
}

void write_pgm(const std::filesystem::path& path, const Matrix& m) {
  if (m.rows() < 1 || m.cols() < 1) throw InvalidInput("write_pgm: empty matrix");
  require_finite(m, "write_pgm");
  std::vector<unsigned char> bytes(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double rounded = std::nearbyint(m(r, c));
      if (rounded < 0.0 || rounded > 255.0) {
        throw InvalidInput("write_pgm: value outside [0, 255]");
      }
      bytes[static_cast<std::size_t>(r) * m.cols() + c] =
          static_cast<unsigned char>(rounded);
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << "P5\n" << m.cols() << " " << m.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError(path.string() + ": write failed");
}

ImageStack load_image_stack(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      files.push_back(entry.path());
    }
  }
  if (ec) throw IoError(dir.string() + ": " + ec.message());
  if (files.empty()) throw IoError(dir.string() + ": no .pgm files");
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename() < b.filename(); });

  ImageStack stack;
  for (std::size_t j = 0; j < files.size(); ++j) {
    const Matrix img = read_pgm(files[j]);
    if (j == 0) {
      stack.pixel_rows = static_cast<int>(img.rows());
      stack.pixel_cols = static_cast<int>(img.cols());
      stack.data.resize(img.size(), static_cast<Eigen::Index>(files.size()));
    } else if (img.rows() != stack.pixel_rows || img.cols() != stack.pixel_cols) {
      throw IoError(files[j].string() + ": image size differs from the stack");
    }
    for (int r = 0; r < stack.pixel_rows; ++r) {
      for (int c = 0; c < stack.pixel_cols; ++c) {
        stack.data(static_cast<Eigen::Index>(r) * stack.pixel_cols + c,
                   static_cast<Eigen::Index>(j)) = img(r, c);
      }
    }
  }
  return stack;
}

std::vector<FeatureRect> default_sailboat_features(int height, int width,
                                                   int count) {
  if (count < 1) throw InvalidInput("sailboat: feature count must be >= 1");
  const int band = height / count;
  if (band < 2 || width < count + 2) {
    throw InvalidInput("sailboat: canvas too small for the feature count");
  }
  std::vector<FeatureRect> rects;
  rects.reserve(count);
  for (int k = 0; k < count; ++k) {
    FeatureRect r;
    r.row0 = k * band;
    r.height = band - 1;  // one blank row between bands
    r.col0 = 1;
    r.width = std::max(1, (width - 2) * (k + 1) / count);
    rects.push_back(r);
  }
  return rects;
}

SailboatData gen_sailboat(const SailboatSpec& spec) {
  if (spec.height < 1 || spec.width < 1 || spec.images < 1) {
    throw InvalidInput("sailboat: dimensions must be positive");
  }
  const std::vector<FeatureRect> rects =
      spec.features.empty()
          ? default_sailboat_features(spec.height, spec.width, 5)
          : spec.features;
  const int nfeat = static_cast<int>(rects.size());
  if (nfeat > 16) throw InvalidInput("sailboat: too many features");
  if (spec.per_image < 1 || spec.per_image > nfeat) {
    throw InvalidInput("sailboat: per_image out of range");
  }
  for (int k = 0; k < nfeat; ++k) {
    const FeatureRect& r = rects[k];
    if (r.row0 < 0 || r.col0 < 0 || r.height < 1 || r.width < 1 ||
        r.row0 + r.height > spec.height || r.col0 + r.width > spec.width) {
      throw InvalidInput("sailboat: feature rectangle out of bounds");
    }
    for (int j = 0; j < k; ++j) {
      const FeatureRect& o = rects[j];
      const bool rows_meet =
          r.row0 < o.row0 + o.height && o.row0 < r.row0 + r.height;
      const bool cols_meet =
          r.col0 < o.col0 + o.width && o.col0 < r.col0 + r.width;
      if (rows_meet && cols_meet) {
        throw InvalidInput("sailboat: feature rectangles overlap");
      }
    }
  }

  SailboatData out;
  out.stack.pixel_rows = spec.height;
  out.stack.pixel_cols = spec.width;
  out.stack.data =
      Matrix::Zero(static_cast<Eigen::Index>(spec.height) * spec.width,
                   spec.images);
  out.image_features.resize(spec.images);

  if (nfeat == 5 && spec.images == 30 && spec.per_image == 3) {
    // Stock layout. The subsets are deliberately skewed: half of the images
    // share one feature triple outright, and two features only ever appear
    // together, so repeated extraction meets clean composite blocks instead
    // of near-ties spread evenly across every subset. No randomness is used.
    constexpr int kStock[][4] = {
        {15, 0, 3, 4}, {4, 1, 2, 3}, {4, 1, 2, 4}, {7, 0, 1, 2},
    };
    int img = 0;
    for (const auto& row : kStock) {
      for (int rep = 0; rep < row[0]; ++rep) {
        out.image_features[img++] = {row[1], row[2], row[3]};
      }
    }
  } else {
    // Lexicographic enumeration of the size-k feature subsets.
    std::vector<std::vector<int>> combos;
    std::vector<int> pick(spec.per_image);
    for (int i = 0; i < spec.per_image; ++i) pick[i] = i;
    while (true) {
      combos.push_back(pick);
      int i = spec.per_image - 1;
      while (i >= 0 && pick[i] == nfeat - spec.per_image + i) --i;
      if (i < 0) break;
      ++pick[i];
      for (int j = i + 1; j < spec.per_image; ++j) pick[j] = pick[j - 1] + 1;
    }

    // Full cycles through the enumeration; only the remainder consumes
    // randomness, so runs are reproducible byte for byte under a fixed seed.
    std::mt19937_64 rng(spec.seed);
    auto bounded = [&rng](std::uint64_t n) {
      const std::uint64_t reject_above =
          std::numeric_limits<std::uint64_t>::max() -
          std::numeric_limits<std::uint64_t>::max() % n;
      std::uint64_t x = rng();
      while (x >= reject_above) x = rng();
      return x % n;
    };

    const std::uint64_t ncombo = combos.size();
    const int cycled = static_cast<int>(
        (static_cast<std::uint64_t>(spec.images) / ncombo) * ncombo);
    for (int img = 0; img < spec.images; ++img) {
      const std::uint64_t pick_at = img < cycled
                                        ? static_cast<std::uint64_t>(img) % ncombo
                                        : bounded(ncombo);
      out.image_features[img] = combos[pick_at];
    }
  }

  for (int img = 0; img < spec.images; ++img) {
    for (int f : out.image_features[img]) {
      const FeatureRect& r = rects[f];
      for (int dr = 0; dr < r.height; ++dr) {
        for (int dc = 0; dc < r.width; ++dc) {
          out.stack.data(
              static_cast<Eigen::Index>(r.row0 + dr) * spec.width + r.col0 + dc,
              img) = 1.0;
        }
      }
    }
  }
  return out;
}

}  // namespace laros
