#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpi/errors.hpp"
#include "tpi/rng.hpp"

namespace tpi {

enum class Species { Cat, Dog };

inline const char* species_name(Species s) { return s == Species::Cat ? "cat" : "dog"; }

// The 37 breed names of the Oxford-IIIT Pet corpus in its own filename
// convention: capitalized stems are cats, lowercase stems are dogs.
inline const std::array<const char*, 37>& pet_breeds() {
  static const std::array<const char*, 37> kBreeds = {
      "Abyssinian",
      "Bengal",
      "Birman",
      "Bombay",
      "British Shorthair",
      "Egyptian Mau",
      "Maine Coon",
      "Persian",
      "Ragdoll",
      "Russian Blue",
      "Siamese",
      "Sphynx",
      "american bulldog",
      "american pit bull terrier",
      "basset hound",
      "beagle",
      "boxer",
      "chihuahua",
      "english cocker spaniel",
      "english setter",
      "german shorthaired",
      "great pyrenees",
      "havanese",
      "japanese chin",
      "keeshond",
      "leonberger",
      "miniature pinscher",
      "newfoundland",
      "pomeranian",
      "pug",
      "saint bernard",
      "samoyed",
      "scottish terrier",
      "shiba inu",
      "staffordshire bull terrier",
      "wheaten terrier",
      "yorkshire terrier",
  };
  return kBreeds;
}

inline bool is_known_breed(const std::string& breed) {
  const auto& breeds = pet_breeds();
  return std::find(breeds.begin(), breeds.end(), breed) != breeds.end();
}

struct PetImage {
  std::string path;
  std::string id;  // filename stem, e.g. "Abyssinian_1"
  std::string breed;
  Species species = Species::Dog;
};

// Parses a dataset filename stem: underscores become spaces and the trailing
// index is stripped, so "wheaten_terrier_10" -> "wheaten terrier". A
// capitalized stem marks a cat.
inline std::optional<std::pair<std::string, Species>> parse_pet_stem(const std::string& stem) {
  auto last_underscore = stem.rfind('_');
  if (last_underscore == std::string::npos || last_underscore + 1 >= stem.size()) return {};
  for (std::size_t i = last_underscore + 1; i < stem.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(stem[i]))) return {};
  std::string breed = stem.substr(0, last_underscore);
  std::replace(breed.begin(), breed.end(), '_', ' ');
  if (breed.empty()) return {};
  Species species =
      std::isupper(static_cast<unsigned char>(breed.front())) ? Species::Cat : Species::Dog;
  return std::make_pair(breed, species);
}

// Deterministic scan: lexicographic byte order of paths; files that are not
// images or do not parse to a known breed are skipped.
inline std::vector<PetImage> scan_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  require(fs::is_directory(dir), Errc::IoError, "not a directory: " + dir);

  static const std::array<const char*, 5> kExtensions = {".jpg", ".jpeg", ".png", ".ppm", ".JPG"};
  std::vector<PetImage> images;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    if (std::find(kExtensions.begin(), kExtensions.end(), ext) == kExtensions.end()) continue;
    std::string stem = entry.path().stem().string();
    auto parsed = parse_pet_stem(stem);
    if (!parsed || !is_known_breed(parsed->first)) continue;
    images.push_back(PetImage{entry.path().string(), stem, parsed->first, parsed->second});
  }
  std::sort(images.begin(), images.end(),
            [](const PetImage& a, const PetImage& b) { return a.path < b.path; });
  require(!images.empty(), Errc::EmptyDataset, "no dataset images found in " + dir);
  return images;
}

// Seeded sample without replacement: partial Fisher-Yates driven by
// SplitMix64(seed); same seed, same subset, on every platform.
template <typename T>
std::vector<T> sample_subset(const std::vector<T>& items, std::size_t n, std::uint64_t seed) {
  require(n <= items.size(), Errc::SampleTooLarge,
          "requested " + std::to_string(n) + " of " + std::to_string(items.size()));
  std::vector<T> pool = items;
  SplitMix64 rng(seed);
  partial_shuffle(pool, n, rng);
  pool.resize(n);
  return pool;
}

// The four answer options for one trial: the correct breed plus three
// distractors; the attack target is the first distractor drawn.
struct ChoiceSet {
  std::string correct;
  std::array<std::string, 3> distractors;
  std::string target;
  std::uint64_t seed = 0;
};

inline ChoiceSet make_choices(const std::string& correct, const std::vector<std::string>& breeds,
                              std::uint64_t seed) {
  require(breeds.size() >= 4, Errc::TooFewBreeds, "need at least 4 breeds");
  require(std::find(breeds.begin(), breeds.end(), correct) != breeds.end(), Errc::InvalidArgument,
          "correct breed '" + correct + "' not in breed list");
  std::vector<std::string> pool;
  pool.reserve(breeds.size() - 1);
  for (const auto& b : breeds)
    if (b != correct) pool.push_back(b);

  SplitMix64 rng(seed ^ fnv1a64(correct));
  partial_shuffle(pool, 3, rng);

  ChoiceSet choices;
  choices.correct = correct;
  choices.distractors = {pool[0], pool[1], pool[2]};
  choices.target = pool[0];
  choices.seed = seed;
  return choices;
}

// ---- Manifest: the JSON hand-off between dataset scan and the runner ----

struct ManifestEntry {
  std::string id;
  std::string path;
  std::string breed;
  Species species = Species::Dog;
  ChoiceSet choices;
};

struct Manifest {
  int schema_version = 1;
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> entries;
};

inline Manifest build_manifest(const std::vector<PetImage>& images, std::uint64_t seed) {
  Manifest manifest;
  manifest.seed = seed;
  manifest.entries.reserve(images.size());
  std::vector<std::string> breeds(pet_breeds().begin(), pet_breeds().end());
  for (const auto& img : images) {
    ManifestEntry entry;
    entry.id = img.id;
    entry.path = img.path;
    entry.breed = img.breed;
    entry.species = img.species;
    entry.choices = make_choices(img.breed, breeds, seed ^ fnv1a64(img.id));
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

inline nlohmann::json manifest_to_json(const Manifest& m) {
  nlohmann::json j;
  j["schema_version"] = m.schema_version;
  j["seed"] = m.seed;
  j["images"] = nlohmann::json::array();
  for (const auto& e : m.entries) {
    nlohmann::json je;
    je["id"] = e.id;
    je["path"] = e.path;
    je["breed"] = e.breed;
    je["species"] = species_name(e.species);
    je["choices"] = {{"correct", e.choices.correct},
                     {"distractors", e.choices.distractors},
                     {"target", e.choices.target}};
    j["images"].push_back(std::move(je));
  }
  return j;
}

inline Manifest manifest_from_json(const nlohmann::json& j) {
  Manifest m;
  try {
    m.schema_version = j.at("schema_version").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& je : j.at("images")) {
      ManifestEntry e;
      e.id = je.at("id").get<std::string>();
      e.path = je.at("path").get<std::string>();
      e.breed = je.at("breed").get<std::string>();
      e.species = je.at("species").get<std::string>() == "cat" ? Species::Cat : Species::Dog;
      e.choices.correct = je.at("choices").at("correct").get<std::string>();
      auto d = je.at("choices").at("distractors");
      require(d.size() == 3, Errc::JsonError, "choices.distractors must have 3 entries");
      for (std::size_t i = 0; i < 3; ++i) e.choices.distractors[i] = d[i].get<std::string>();
      e.choices.target = je.at("choices").at("target").get<std::string>();
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    fail(Errc::JsonError, std::string("bad manifest: ") + ex.what());
  }
  return m;
}

inline void write_manifest(const std::string& path, const Manifest& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot open " + path + " for writing");
  out << manifest_to_json(m).dump(2) << "\n";
  if (!out) fail(Errc::IoError, "short write to " + path);
}

inline Manifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    fail(Errc::JsonError, std::string("bad manifest JSON: ") + ex.what());
  }
  return manifest_from_json(j);
}

}  // namespace tpi
