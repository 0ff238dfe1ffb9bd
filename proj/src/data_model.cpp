#include "xmm/data_model.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "xmm/error.hpp"
#include "xmm/text_format.hpp"

namespace xmm {

namespace {

constexpr double kZeroNorm = 1e-12;
constexpr double kUnitSlack = 1e-12;

char modality_tag(Modality m) { return m == Modality::Infrared ? 'r' : 'v'; }

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    const std::size_t next = line.find(' ', pos);
    const std::size_t end = next == std::string_view::npos ? line.size() : next;
    out.push_back(line.substr(pos, end - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::Visible: return "visible";
    case Modality::Infrared: return "infrared";
    case Modality::IntermediateVisible: return "intermediate";
  }
  return "unknown";
}

std::vector<std::vector<std::size_t>> PseudoLabels::members() const {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(cluster_count));
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= 0) out[static_cast<std::size_t>(labels[i])].push_back(i);
  return out;
}

void normalize_row(std::span<double> row) {
  const double norm = std::sqrt(dot(row, row));
  if (norm < kZeroNorm) throw ZeroVector("row norm " + format_double(norm));
  if (std::abs(norm - 1.0) <= kUnitSlack) return;
  for (double& v : row) v /= norm;
}

Matrix normalize(Matrix vectors) {
  for (std::size_t r = 0; r < vectors.rows(); ++r) {
    try {
      normalize_row(vectors.row(r));
    } catch (const ZeroVector&) {
      throw ZeroVector("row " + std::to_string(r));
    }
  }
  return vectors;
}

EmbeddingSet parse_embeddings(std::string_view text, Modality modality) {
  std::size_t line_no = 0;
  std::size_t dim = 0;
  bool have_header = false;
  std::optional<bool> with_ids;
  std::vector<double> values;
  std::vector<long long> ids;
  std::size_t rows = 0;

  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::string where = "line " + std::to_string(line_no);

    if (!have_header) {
      constexpr std::string_view kHeader = "#dim ";
      long long d = 0;
      if (!line.starts_with(kHeader) || !parse_int(line.substr(kHeader.size()), d) || d < 1)
        throw ParseError(where + ": expected '#dim <d>' header");
      dim = static_cast<std::size_t>(d);
      have_header = true;
      continue;
    }
    if (line.empty()) continue;

    auto fields = split_spaces(line);
    if (fields[0].size() != 1 || (fields[0][0] != 'v' && fields[0][0] != 'r'))
      throw ParseError(where + ": modality tag must be 'v' or 'r'");
    if (fields[0][0] != modality_tag(modality))
      throw ParseError(where + ": record modality does not match requested " +
                       std::string(to_string(modality)));

    std::size_t first_value = 1;
    const bool row_has_id = fields.size() > 1 && fields[1].starts_with("id:");
    if (with_ids && *with_ids != row_has_id)
      throw ParseError(where + ": id field present on some records only");
    with_ids = row_has_id;
    if (row_has_id) {
      long long id = 0;
      if (!parse_int(fields[1].substr(3), id)) throw ParseError(where + ": bad id field");
      ids.push_back(id);
      first_value = 2;
    }

    const std::size_t d = fields.size() - first_value;
    if (d != dim)
      throw DimMismatch(where + ": " + std::to_string(d) + " values, header says " +
                        std::to_string(dim));
    for (std::size_t f = first_value; f < fields.size(); ++f) {
      double v = 0.0;
      if (!parse_double(fields[f], v) || !std::isfinite(v))
        throw ParseError(where + ": bad value '" + std::string(fields[f]) + "'");
      values.push_back(v);
    }
    ++rows;
  }
  if (!have_header) throw ParseError("line 1: missing '#dim <d>' header");
  if (rows == 0) throw ParseError("no records");

  EmbeddingSet set;
  set.modality = modality;
  set.vectors = Matrix(rows, dim);
  std::copy(values.begin(), values.end(), set.vectors.row(0).data());
  set.vectors = normalize(std::move(set.vectors));
  set.ids = std::move(ids);
  return set;
}

std::string format_embeddings(const EmbeddingSet& set) {
  std::string out = "#dim " + std::to_string(set.dim()) + "\n";
  const char tag = modality_tag(set.modality);
  for (std::size_t r = 0; r < set.size(); ++r) {
    out += tag;
    if (set.has_ids()) out += " id:" + std::to_string(set.ids[r]);
    for (double v : set.vectors.row(r)) {
      out += ' ';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

EmbeddingSet load_embeddings(const std::filesystem::path& path, Modality modality) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_embeddings(buf.str(), modality);
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << format_embeddings(set);
  if (!out) throw IoError("write failed for " + path.string());
}

EmbeddingSet make_intermediate(const EmbeddingSet& visible, double sigma, std::uint64_t seed) {
  if (visible.modality != Modality::Visible)
    throw InvalidConfig("make_intermediate expects a visible set");
  if (!(sigma >= 0.0)) throw InvalidConfig("sigma must be non-negative");
  EmbeddingSet out = visible;
  out.modality = Modality::IntermediateVisible;
  if (sigma == 0.0) return out;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma / std::sqrt(static_cast<double>(visible.dim())));
  for (std::size_t r = 0; r < out.size(); ++r) {
    auto row = out.vectors.row(r);
    for (double& v : row) v += noise(rng);
    try {
      normalize_row(row);
    } catch (const ZeroVector&) {
      throw ZeroVector("intermediate row " + std::to_string(r));
    }
  }
  return out;
}

}  // namespace xmm
