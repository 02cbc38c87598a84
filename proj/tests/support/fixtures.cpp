#include "fixtures.hpp"

#include "bidforge/hash.hpp"
#include "bidforge/text.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <unistd.h>

namespace bidforge::testing {

namespace {

struct Action {
    const char* base;
    const char* third;
};

const std::vector<std::string> kOrganisms = {
    "kingfisher", "hummingbird", "owl",    "woodpecker", "gecko",  "beetle",  "termite", "butterfly",
    "mosquito",   "shark",       "salmon", "lotus",      "cactus", "bamboo",  "bat",     "whale",
    "octopus",    "spider",      "diatom", "penguin",    "moth",   "dolphin", "pangolin", "sunflower"};
const std::vector<std::string> kFeatures = {"beak",  "feathers", "scales", "wings",  "skin", "shell",
                                            "roots", "leaves",   "fins",   "silk",   "tentacles", "bones"};
const std::vector<Action> kActions = {
    {"reduce drag", "reduces drag"},         {"repel water", "repels water"},
    {"dissipate heat", "dissipates heat"},   {"absorb impact", "absorbs impact"},
    {"capture light", "captures light"},     {"filter particles", "filters particles"},
    {"grip surfaces", "grips surfaces"},     {"store energy", "stores energy"},
    {"dampen noise", "dampens noise"},       {"resist fracture", "resists fracture"}};
const std::vector<std::string> kProducts = {"train nose",   "drone rotor",   "building facade", "solar panel",
                                            "helmet liner", "water filter",  "adhesive tape",   "turbine blade",
                                            "car body",     "robot gripper", "fabric coating",  "cooling system"};
const std::vector<std::string> kAdjectives = {"textured", "layered", "porous", "ribbed", "flexible", "hollow"};
const std::vector<std::string> kHabitats = {"fast rivers", "dry deserts", "cold oceans", "dense forests",
                                            "open grasslands", "coral reefs"};
const std::vector<std::string> kBenefits = {"Energy efficient", "Lightweight",    "Durable",         "Low noise",
                                            "Water resistant",  "Low cost",       "Heat resistant",  "Strong"};
const std::vector<std::string> kApplications = {"Transportation", "Architecture", "Robotics",   "Energy",
                                                "Medical devices", "Textiles",    "Packaging", "Aerospace"};

template <class T>
const T& pick(SeededRng& rng, const std::vector<T>& pool) {
    return pool[rng.below(pool.size())];
}

std::vector<std::string> pick_distinct(SeededRng& rng, const std::vector<std::string>& pool, std::size_t count) {
    std::vector<std::string> out;
    while (out.size() < count) {
        const auto& word = pick(rng, pool);
        if (std::find(out.begin(), out.end(), word) == out.end()) out.push_back(word);
    }
    return out;
}

}  // namespace

Corpus synthetic_corpus(std::size_t size, std::uint64_t seed, const std::string& id_prefix) {
    SeededRng rng(seed);
    Corpus corpus;
    corpus.source_path = "synthetic";
    for (std::size_t i = 0; i < size; ++i) {
        const auto& organism = pick(rng, kOrganisms);
        const auto& feature = pick(rng, kFeatures);
        const auto& action = pick(rng, kActions);
        const auto& product = pick(rng, kProducts);
        const auto& adjective = pick(rng, kAdjectives);
        const auto& habitat = pick(rng, kHabitats);

        InnovationRecord r;
        char id[64];
        std::snprintf(id, sizeof id, "%s-%03zu", id_prefix.c_str(), i + 1);
        r.id = id;
        r.benefits = pick_distinct(rng, kBenefits, 1 + rng.below(2));
        r.applications = pick_distinct(rng, kApplications, 1 + rng.below(2));
        r.challenge = "Designers of every " + product + " struggle because conventional parts cannot " + action.base +
                      " without extra weight.";
        r.innovation = "Engineers built a " + product + " whose " + adjective + " surface " + action.third +
                       " by copying the " + feature + " of the " + organism + ". The " + organism +
                       " inspired design is " + to_lower(r.benefits.front()) + ".";
        r.biomimicry = "The " + organism + " uses its " + feature + " to " + action.base + ". Tiny " + adjective +
                       " structures on the " + feature + " help it survive in " + habitat + ".";
        corpus.records.push_back(std::move(r));
    }
    return corpus;
}

std::vector<std::string> fixture_vocabulary() {
    std::set<std::string> words;
    auto add = [&](const std::string& text) {
        for (auto& t : alpha_tokens(text)) words.insert(std::move(t));
    };
    for (const auto* pool : {&kOrganisms, &kFeatures, &kProducts, &kAdjectives, &kHabitats, &kBenefits, &kApplications})
        for (const auto& w : *pool) add(w);
    for (const auto& a : kActions) {
        add(a.base);
        add(a.third);
    }
    add("designers of every struggle because conventional parts cannot without extra weight engineers built a whose "
        "surface by copying the inspired design is uses its to tiny structures on help it survive in");
    return {words.begin(), words.end()};
}

EmbeddingStore synthetic_embeddings(const std::vector<std::string>& tokens, std::size_t dimension, std::uint64_t seed) {
    std::vector<EmbeddingStore::Entry> entries;
    for (const auto& token : tokens) {
        SeededRng rng(StableHasher().add(seed).add(token).digest());
        std::vector<double> v(dimension);
        for (auto& x : v) x = 2.0 * rng.unit() - 1.0;
        entries.emplace_back(token, std::move(v));
    }
    return EmbeddingStore::from_entries(dimension, entries);
}

EmbeddingStore token_embeddings(std::size_t count, std::size_t dimension, std::uint64_t seed) {
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < count; ++i) {
        tokens.push_back((i < 10 ? "w0" : "w") + std::to_string(i));
    }
    return synthetic_embeddings(tokens, dimension, seed);
}

NBowDocument random_document(SeededRng& rng, const EmbeddingStore& store, std::size_t max_tokens) {
    const auto k = 1 + rng.below(max_tokens);
    std::vector<std::string> pool = store.tokens();
    NBowDocument doc;
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const auto pick = i + rng.below(pool.size() - i);
        std::swap(pool[i], pool[pick]);
        doc.tokens.push_back(pool[i]);
        const double w = 0.05 + rng.unit();
        doc.weights.push_back(w);
        total += w;
    }
    for (auto& w : doc.weights) w /= total;
    return doc;
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("bidforge-" + name + "-" + std::to_string(static_cast<long>(::getpid())));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string mock_config_text(const std::filesystem::path& corpus, const std::filesystem::path& embeddings,
                             const std::filesystem::path& out, std::uint64_t seed) {
    std::string text = "# desk-scale mock run\n";
    text += "corpus.path = " + corpus.string() + "\n";
    text += "backend.kind = mock\n";
    for (const auto* kind : {"gen1", "gen2", "gen3", "random_inno", "eval_bio", "eval_ben", "eval_cha"})
        text += std::string("models.") + kind + " = mock-" + kind + "\n";
    if (!embeddings.empty()) text += "embeddings.path = " + embeddings.string() + "\n";
    text += "output.dir = " + out.string() + "\n";
    text += "seed = " + std::to_string(seed) + "\n";
    text += "run.timestamp = 2023-01-01T00:00:00Z\n";
    return text;
}

std::filesystem::path data_dir() {
    return BIDFORGE_DATA_DIR;
}

}  // namespace bidforge::testing
