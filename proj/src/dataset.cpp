#include "vecont/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "vecont/error.hpp"
#include "vecont/rng.hpp"

namespace vecont {

std::vector<std::string> union_genres(std::span<const Artist> artists) {
  std::set<std::string> all;
  for (const auto& a : artists) all.insert(a.genres.begin(), a.genres.end());
  return {all.begin(), all.end()};
}

std::vector<FeatureVector> features_of(std::span<const SongRecord> records) {
  std::vector<FeatureVector> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.features);
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(delim, start);
    const auto piece = trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
    if (!piece.empty()) out.push_back(piece);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// RFC 4180 field splitting for one physical line (no embedded newlines).
std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  if (quoted) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

bool in_domain(double v, const DimensionDomain& d) { return v >= d.min && v <= d.max; }

IngestResult ingest_jsonl(std::istream& in, std::span<const DimensionDomain> dims) {
  IngestResult result;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object())
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected an object");
    std::vector<std::string> missing;
    for (const char* key : {"id", "artists", "features"})
      if (!j.contains(key)) missing.emplace_back(key);
    if (!missing.empty()) {
      std::string list;
      for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
      throw Error(ErrorCode::SchemaError, "line " + std::to_string(line_no) + ": missing " + list);
    }

    try {
      SongRecord song;
      song.id = j.at("id").get<std::string>();
      song.title = j.value("title", std::string{});
      for (const auto& a : j.at("artists")) {
        Artist artist;
        artist.name = a.value("name", std::string{});
        if (a.contains("genres")) artist.genres = a.at("genres").get<std::vector<std::string>>();
        song.artists.push_back(std::move(artist));
      }
      song.artist_genres = union_genres(song.artists);

      const auto& feats = j.at("features");
      std::string reject;
      for (const auto& d : dims) {
        if (!feats.contains(d.name) || !feats.at(d.name).is_number()) {
          reject = "missing feature " + d.name;
          break;
        }
        const double v = feats.at(d.name).get<double>();
        if (!in_domain(v, d)) {
          reject = d.name + " out of range";
          break;
        }
        song.features.values.push_back(v);
      }
      if (reject.empty() && song.id.empty()) reject = "empty id";
      if (reject.empty() && !ids.insert(song.id).second) reject = "duplicate id " + song.id;
      if (!reject.empty()) {
        result.rejected.push_back({line_no, reject});
        continue;
      }
      result.records.push_back(std::move(song));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::SchemaError, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return result;
}

IngestResult ingest_csv(std::istream& in, std::span<const DimensionDomain> dims) {
  IngestResult result;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw Error(ErrorCode::SchemaError, "CSV file has no header");
  ++line_no;
  const auto header = split_csv_line(line, line_no);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[trim(header[i])] = i;

  std::vector<std::string> missing;
  for (const char* key : {"id", "genres"})
    if (!col.contains(key)) missing.emplace_back(key);
  for (const auto& d : dims)
    if (!col.contains(d.name)) missing.push_back(d.name);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw Error(ErrorCode::SchemaError, "CSV header missing columns: " + list);
  }

  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line, line_no);
    if (fields.size() != header.size())
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(header.size()) + " fields, got " +
                                             std::to_string(fields.size()));
    SongRecord song;
    song.id = trim(fields[col["id"]]);
    if (col.contains("title")) song.title = trim(fields[col["title"]]);
    const auto genres = split_list(fields[col["genres"]], ';');
    // CSV carries song-level labels only; every listed artist receives them.
    auto names = col.contains("artists") ? split_list(fields[col["artists"]], ';')
                                         : std::vector<std::string>{};
    if (names.empty()) names.emplace_back();
    for (auto& name : names) song.artists.push_back({std::move(name), genres});
    song.artist_genres = union_genres(song.artists);

    std::string reject;
    for (const auto& d : dims) {
      const auto cell = trim(fields[col[d.name]]);
      double v = 0.0;
      std::size_t used = 0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (cell.empty() || used != cell.size()) {
        reject = "missing feature " + d.name;
        break;
      }
      if (!in_domain(v, d)) {
        reject = d.name + " out of range";
        break;
      }
      song.features.values.push_back(v);
    }
    if (reject.empty() && song.id.empty()) reject = "empty id";
    if (reject.empty() && !ids.insert(song.id).second) reject = "duplicate id " + song.id;
    if (!reject.empty()) {
      result.rejected.push_back({line_no, reject});
      continue;
    }
    result.records.push_back(std::move(song));
  }
  return result;
}

}  // namespace

IngestResult ingest(const std::filesystem::path& path, CorpusFormat format,
                    std::span<const DimensionDomain> dims) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return format == CorpusFormat::Jsonl ? ingest_jsonl(in, dims) : ingest_csv(in, dims);
}

nlohmann::json to_json(const SongRecord& song, std::span<const DimensionDomain> dims) {
  nlohmann::json artists = nlohmann::json::array();
  for (const auto& a : song.artists) artists.push_back({{"name", a.name}, {"genres", a.genres}});
  nlohmann::json feats = nlohmann::json::object();
  for (std::size_t k = 0; k < dims.size(); ++k) feats[dims[k].name] = song.features.values.at(k);
  return {{"id", song.id}, {"title", song.title}, {"artists", artists}, {"features", feats}};
}

void write_jsonl(const std::filesystem::path& path, std::span<const SongRecord> records,
                 std::span<const DimensionDomain> dims) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& r : records) {
    nlohmann::ordered_json feats = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < dims.size(); ++k) feats[dims[k].name] = r.features.values.at(k);
    nlohmann::ordered_json artists = nlohmann::ordered_json::array();
    for (const auto& a : r.artists) artists.push_back({{"name", a.name}, {"genres", a.genres}});
    nlohmann::ordered_json line;
    line["id"] = r.id;
    line["title"] = r.title;
    line["artists"] = artists;
    line["features"] = feats;
    out << line.dump() << '\n';
  }
}

std::vector<std::size_t> cluster_counts(const SynthSpec& spec) {
  double total_weight = 0.0;
  for (const auto& c : spec.clusters) total_weight += c.weight;
  std::vector<std::size_t> counts(spec.clusters.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < spec.clusters.size(); ++i) {
    const double exact = static_cast<double>(spec.total_count) * spec.clusters[i].weight / total_weight;
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  // Largest remainder first; ties go to the earlier cluster.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < spec.total_count; ++r, ++assigned)
    ++counts[remainders[r % remainders.size()].second];
  return counts;
}

namespace {

void validate_synth(const SynthSpec& spec) {
  std::vector<std::string> problems;
  if (spec.dims.empty()) problems.emplace_back("no dimensions");
  if (spec.clusters.empty()) problems.emplace_back("no clusters");
  for (const auto& c : spec.clusters) {
    if (c.genre.empty()) problems.emplace_back("cluster with empty genre");
    if (!(c.weight > 0.0)) problems.push_back(c.genre + ": weight must be positive");
    if (c.mean.size() != spec.dims.size() || c.spread.size() != spec.dims.size()) {
      problems.push_back(c.genre + ": mean/spread length mismatch");
      continue;
    }
    for (std::size_t k = 0; k < spec.dims.size(); ++k) {
      if (!(c.mean[k] >= spec.dims[k].min && c.mean[k] <= spec.dims[k].max))
        problems.push_back(c.genre + ": mean " + spec.dims[k].name + " out of domain");
      if (!(c.spread[k] >= 0.0)) problems.push_back(c.genre + ": negative spread");
    }
    if (!(c.secondary_prob >= 0.0 && c.secondary_prob <= 1.0))
      problems.push_back(c.genre + ": secondary_prob outside [0,1]");
  }
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw Error(ErrorCode::InvalidSpec, msg);
  }
}

std::string zero_pad(std::size_t v, int width) {
  std::string s = std::to_string(v);
  return std::string(s.size() < static_cast<std::size_t>(width) ? width - s.size() : 0, '0') + s;
}

}  // namespace

std::vector<SongRecord> synthesize(const SynthSpec& spec) {
  validate_synth(spec);
  const auto counts = cluster_counts(spec);
  Rng rng(spec.seed, "synthesis");
  std::vector<SongRecord> out;
  out.reserve(spec.total_count);
  std::size_t serial = 0;
  for (std::size_t ci = 0; ci < spec.clusters.size(); ++ci) {
    const auto& c = spec.clusters[ci];
    for (std::size_t s = 0; s < counts[ci]; ++s) {
      SongRecord song;
      song.id = "syn-" + zero_pad(++serial, 7);
      song.title = c.genre + " track " + std::to_string(s + 1);
      Artist artist{c.genre + " artist " + std::to_string(s % 25 + 1), {c.genre}};
      for (const auto& label : c.secondary_labels)
        if (rng.uniform() < c.secondary_prob) artist.genres.push_back(label);
      song.artists.push_back(std::move(artist));
      song.artist_genres = union_genres(song.artists);
      song.features.values.resize(spec.dims.size());
      for (std::size_t k = 0; k < spec.dims.size(); ++k) {
        const double raw = c.mean[k] + (c.spread[k] > 0.0 ? c.spread[k] * rng.normal() : 0.0);
        const double clipped = std::clamp(raw, spec.dims[k].min, spec.dims[k].max);
        song.features.values[k] =
            c.spread[k] > 0.0 ? std::clamp(std::round(clipped * 1000.0) / 1000.0, spec.dims[k].min,
                                           spec.dims[k].max)
                              : clipped;
      }
      out.push_back(std::move(song));
    }
  }
  return out;
}

SynthSpec default_synth_spec(std::size_t total_count, std::uint64_t seed) {
  struct Row {
    const char* genre;
    double f[8];
    const char* secondary;
  };
  // danceability energy speechiness acousticness instrumentalness liveness valence tempo
  static constexpr Row kRows[] = {
      {"pop", {.68, .70, .06, .15, .01, .15, .55, 118}, nullptr},
      {"rock", {.50, .78, .05, .08, .05, .18, .50, 125}, nullptr},
      {"jazz", {.55, .35, .05, .75, .45, .14, .50, 110}, nullptr},
      {"classical", {.28, .15, .04, .95, .88, .12, .22, 90}, nullptr},
      {"hip hop", {.78, .66, .28, .12, .00, .18, .52, 95}, "rap"},
      {"rap", {.80, .68, .32, .10, .00, .20, .50, 100}, "hip hop"},
      {"r&b", {.70, .55, .09, .25, .01, .13, .52, 100}, "soul"},
      {"country", {.60, .62, .04, .28, .01, .17, .60, 120}, nullptr},
      {"folk", {.52, .38, .04, .75, .08, .13, .45, 112}, nullptr},
      {"blues", {.52, .50, .05, .50, .12, .22, .55, 105}, nullptr},
      {"metal", {.40, .93, .08, .01, .20, .22, .28, 132}, "rock"},
      {"punk", {.45, .92, .07, .02, .02, .28, .52, 160}, "rock"},
      {"electronic", {.66, .78, .06, .06, .65, .16, .38, 126}, nullptr},
      {"techno", {.70, .82, .06, .03, .85, .12, .30, 130}, "electronic"},
      {"house", {.76, .80, .07, .04, .65, .12, .50, 124}, "electronic"},
      {"trance", {.55, .88, .05, .03, .82, .16, .25, 138}, "electronic"},
      {"dubstep", {.58, .90, .09, .03, .50, .22, .30, 142}, "electronic"},
      {"reggae", {.78, .58, .13, .15, .05, .16, .78, 88}, nullptr},
      {"ska", {.62, .85, .06, .06, .02, .25, .80, 155}, nullptr},
      {"latin", {.75, .75, .08, .22, .01, .14, .78, 112}, nullptr},
      {"salsa", {.72, .72, .05, .35, .02, .18, .88, 95}, "latin"},
      {"soul", {.60, .52, .05, .42, .02, .16, .62, 108}, nullptr},
      {"funk", {.80, .72, .07, .12, .08, .15, .82, 110}, nullptr},
      {"disco", {.80, .78, .05, .10, .05, .12, .82, 120}, nullptr},
      {"gospel", {.50, .50, .06, .45, .00, .30, .50, 98}, nullptr},
      {"opera", {.22, .20, .05, .92, .20, .25, .15, 85}, "classical"},
      {"ambient", {.25, .12, .04, .85, .90, .11, .10, 75}, nullptr},
      {"lo-fi", {.68, .35, .10, .65, .75, .11, .45, 85}, nullptr},
      {"indie rock", {.50, .68, .04, .15, .10, .13, .45, 124}, "indie"},
      {"indie pop", {.60, .55, .04, .30, .05, .12, .50, 118}, "indie"},
      {"alternative rock", {.48, .75, .05, .08, .05, .17, .42, 128}, "rock"},
      {"hard rock", {.45, .88, .06, .02, .03, .20, .48, 130}, "rock"},
      {"punk rock", {.42, .94, .07, .01, .01, .30, .45, 165}, "punk"},
      {"grunge", {.40, .82, .05, .03, .05, .18, .30, 122}, nullptr},
      {"emo", {.40, .84, .06, .02, .00, .20, .35, 150}, nullptr},
      {"k-pop", {.70, .82, .07, .10, .00, .15, .62, 122}, "pop"},
      {"j-pop", {.60, .80, .05, .12, .00, .16, .60, 130}, "pop"},
      {"edm", {.62, .88, .07, .03, .25, .22, .40, 128}, "electronic"},
      {"drum and bass", {.55, .92, .08, .02, .50, .20, .35, 172}, nullptr},
      {"bossa nova", {.62, .30, .05, .80, .10, .12, .58, 95}, nullptr},
      {"flamenco", {.55, .55, .06, .80, .10, .25, .55, 125}, nullptr},
      {"afrobeat", {.78, .72, .08, .18, .20, .14, .80, 108}, nullptr},
      {"synthwave", {.58, .72, .04, .04, .70, .12, .40, 110}, nullptr},
      {"new age", {.25, .15, .04, .88, .85, .10, .15, 70}, nullptr},
      {"singer-songwriter", {.50, .32, .04, .78, .02, .12, .38, 115}, nullptr},
      {"trap", {.78, .65, .20, .08, .00, .15, .35, 140}, "hip hop"},
      {"swing", {.65, .50, .06, .65, .10, .20, .75, 145}, "jazz"},
      {"bluegrass", {.55, .55, .04, .70, .10, .20, .70, 150}, "country"},
      {"grime", {.72, .75, .28, .06, .01, .18, .45, 140}, nullptr},
      {"shoegaze", {.35, .70, .04, .10, .65, .14, .25, 115}, nullptr},
  };
  SynthSpec spec;
  spec.dims = song_dimensions();
  spec.total_count = total_count;
  spec.seed = seed;
  for (const auto& row : kRows) {
    SynthCluster c;
    c.genre = row.genre;
    c.mean.assign(row.f, row.f + 8);
    c.spread = {0.07, 0.07, 0.03, 0.08, 0.08, 0.05, 0.08, 10.0};
    if (row.secondary) {
      c.secondary_labels.emplace_back(row.secondary);
      c.secondary_prob = 0.3;
    }
    spec.clusters.push_back(std::move(c));
  }
  return spec;
}

GroundTruthIndex::GroundTruthIndex(Ontology ontology) : ontology_(std::move(ontology)) {}

void GroundTruthIndex::add(const DiscretePosition& bin, std::span<const std::string> genres) {
  validate_position(ontology_, bin);
  auto& counts = bins_[bin];
  for (const auto& g : genres) ++counts[g];
  ++songs_[bin];
  ++total_;
}

void GroundTruthIndex::add_aggregate(const DiscretePosition& bin, const GenreCounts& counts,
                                     std::uint64_t songs) {
  validate_position(ontology_, bin);
  auto& mine = bins_[bin];
  for (const auto& [g, c] : counts) mine[g] += c;
  songs_[bin] += songs;
  total_ += songs;
}

void GroundTruthIndex::merge(const GroundTruthIndex& other) {
  if (!(other.ontology_ == ontology_))
    throw Error(ErrorCode::InvalidSpec, "cannot merge indexes built on different ontologies");
  for (const auto& [bin, counts] : other.bins_) {
    auto& mine = bins_[bin];
    for (const auto& [g, c] : counts) mine[g] += c;
  }
  for (const auto& [bin, c] : other.songs_) songs_[bin] += c;
  total_ += other.total_;
}

std::uint64_t GroundTruthIndex::count(const DiscretePosition& bin, const std::string& genre) const {
  const auto it = bins_.find(bin);
  if (it == bins_.end()) return 0;
  const auto g = it->second.find(genre);
  return g == it->second.end() ? 0 : g->second;
}

bool GroundTruthIndex::contains_genre(const std::string& genre) const {
  for (const auto& [bin, counts] : bins_)
    if (auto it = counts.find(genre); it != counts.end() && it->second > 0) return true;
  return false;
}

std::vector<std::string> GroundTruthIndex::genres() const {
  std::set<std::string> all;
  for (const auto& [bin, counts] : bins_)
    for (const auto& [g, c] : counts) all.insert(g);
  return {all.begin(), all.end()};
}

GroundTruthIndex build_index(const Ontology& ontology, std::span<const SongRecord> corpus) {
  GroundTruthIndex index(ontology);
  for (const auto& song : corpus) {
    DiscretePosition bin;
    try {
      bin = assign_bin(ontology, song.features);
    } catch (const Error& e) {
      throw Error(e.code(), "song " + song.id + ": " + e.what());
    }
    index.add(bin, song.artist_genres);
  }
  return index;
}

nlohmann::json to_json(const GroundTruthIndex& index) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& [bin, counts] : index.bins()) {
    bins.push_back({{"position", bin.indices},
                    {"songs", index.songs_per_bin().at(bin)},
                    {"genres", counts}});
  }
  return {{"schema_version", 1},
          {"ontology", to_json(index.ontology())},
          {"total_songs", index.total_songs()},
          {"bins", bins}};
}

GroundTruthIndex index_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != 1)
      throw Error(ErrorCode::SchemaError, "unsupported index schema_version");
    GroundTruthIndex index(ontology_from_json(j.at("ontology")));
    for (const auto& b : j.at("bins")) {
      index.add_aggregate(DiscretePosition{b.at("position").get<std::vector<int>>()},
                          b.at("genres").get<GroundTruthIndex::GenreCounts>(),
                          b.at("songs").get<std::uint64_t>());
    }
    return index;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("index json: ") + e.what());
  }
}

GenreCentroid genre_centroid(const GroundTruthIndex& index, const std::string& genre,
                             std::uint64_t min_count) {
  const auto& ontology = index.ontology();
  GenreCentroid out;
  out.genre = genre;
  out.point.coords.assign(ontology.dimension_count(), 0.0);
  for (const auto& [bin, counts] : index.bins()) {
    const auto it = counts.find(genre);
    if (it == counts.end() || it->second == 0 || it->second < min_count) continue;
    const auto center = bin_center(ontology, bin);
    for (std::size_t k = 0; k < center.coords.size(); ++k)
      out.point.coords[k] += static_cast<double>(it->second) * center.coords[k];
    out.weight_total += it->second;
  }
  if (out.weight_total == 0) throw Error(ErrorCode::GenreAbsent, "genre '" + genre + "' not in index");
  for (auto& c : out.point.coords) c /= static_cast<double>(out.weight_total);
  return out;
}

HeatmapGrid heatmap_grid(const GroundTruthIndex& index, const std::string& genre,
                         const PcaModel& projector, int grid, std::optional<Extent2> extent) {
  if (projector.output_dim() < 2 || projector.input_dim() != index.ontology().dimension_count())
    throw Error(ErrorCode::UnfittedProjector, "heatmap needs a fitted projector with 2+ components");
  if (grid < 1) throw Error(ErrorCode::InvalidSpec, "grid size must be positive");

  struct Projected {
    double x, y;
    double count;
  };
  std::vector<Projected> pts;
  pts.reserve(index.bins().size());
  for (const auto& [bin, counts] : index.bins()) {
    const auto center = bin_center(index.ontology(), bin);
    const auto xy = project(projector, center.coords);
    const auto it = counts.find(genre);
    pts.push_back({xy[0], xy[1], it == counts.end() ? 0.0 : static_cast<double>(it->second)});
  }

  HeatmapGrid out;
  out.size = grid;
  if (extent) {
    out.extent = *extent;
  } else if (!pts.empty()) {
    out.extent = {pts[0].x, pts[0].x, pts[0].y, pts[0].y};
    for (const auto& p : pts) {
      out.extent.x_min = std::min(out.extent.x_min, p.x);
      out.extent.x_max = std::max(out.extent.x_max, p.x);
      out.extent.y_min = std::min(out.extent.y_min, p.y);
      out.extent.y_max = std::max(out.extent.y_max, p.y);
    }
  }
  const auto cell_of = [grid](double v, double lo, double hi) {
    if (!(hi > lo)) return 0;
    const int c = static_cast<int>(std::floor((v - lo) / (hi - lo) * grid));
    return std::clamp(c, 0, grid - 1);
  };

  std::vector<double> sums(static_cast<std::size_t>(grid) * grid, 0.0);
  out.bins_per_cell.assign(sums.size(), 0);
  for (const auto& p : pts) {
    if (p.x < out.extent.x_min || p.x > out.extent.x_max || p.y < out.extent.y_min ||
        p.y > out.extent.y_max)
      continue;
    const int col = cell_of(p.x, out.extent.x_min, out.extent.x_max);
    const int row = cell_of(p.y, out.extent.y_min, out.extent.y_max);
    sums[row * grid + col] += p.count;
    ++out.bins_per_cell[row * grid + col];
  }
  out.cells.resize(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i)
    if (out.bins_per_cell[i] > 0) out.cells[i] = sums[i] / out.bins_per_cell[i];
  return out;
}

nlohmann::json to_json(const HeatmapGrid& grid) {
  nlohmann::json cells = nlohmann::json::array();
  for (int r = 0; r < grid.size; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < grid.size; ++c) {
      const auto& v = grid.at(r, c);
      row.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    }
    cells.push_back(std::move(row));
  }
  return {{"size", grid.size},
          {"extent",
           {{"x_min", grid.extent.x_min},
            {"x_max", grid.extent.x_max},
            {"y_min", grid.extent.y_min},
            {"y_max", grid.extent.y_max}}},
          {"cells", cells},
          {"empty_marker", nullptr}};
}

BinMembership::BinMembership(const Ontology& ontology, std::span<const SongRecord> corpus) {
  for (std::size_t i = 0; i < corpus.size(); ++i)
    members_[assign_bin(ontology, corpus[i].features)].push_back(i);
  for (auto& [bin, list] : members_) {
    std::sort(list.begin(), list.end(),
              [&](std::size_t a, std::size_t b) { return corpus[a].id < corpus[b].id; });
  }
}

std::span<const std::size_t> BinMembership::members(const DiscretePosition& bin) const {
  const auto it = members_.find(bin);
  if (it == members_.end()) return {};
  return it->second;
}

SongSample sample_songs(const BinMembership& membership, const DiscretePosition& bin,
                        std::size_t cap, std::uint64_t seed) {
  if (cap < 1) throw Error(ErrorCode::InvalidSpec, "sample cap must be at least 1");
  const auto members = membership.members(bin);
  SongSample out;
  if (members.empty()) {
    out.empty_bin = true;
    return out;
  }
  Rng rng(seed);
  for (std::size_t i : rng.sample_without_replacement(members.size(), cap))
    out.songs.push_back(members[i]);
  return out;
}

}  // namespace vecont
