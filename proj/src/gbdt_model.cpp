#include <fstream>
#include <sstream>

#include <json.hpp>

#include "metric_gate/errors.hpp"
#include "metric_gate/gbdt.hpp"
#include "metric_gate/hashing.hpp"

namespace mgate {
namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kFormatName = "metric-gate-gbdt";

Json schema_to_json(const FeatureSchema& s) {
    Json j;
    j["fingerprint"] = s.fingerprint;
    j["feature_count"] = s.feature_count;
    j["embed_dim"] = s.embed_dim;
    j["embedder"] = s.embedder_family;
    return j;
}

Json node_to_json(const TreeNode& n) {
    Json j;
    if (n.is_leaf()) {
        j["leaf"] = n.weight;
    } else {
        j["feature"] = n.feature;
        j["threshold"] = n.threshold;
        j["left"] = n.left;
        j["right"] = n.right;
        j["gain"] = n.gain;
    }
    j["sum_grad"] = n.sum_grad;
    j["sum_hess"] = n.sum_hess;
    return j;
}

Json body_to_json(const GbdtModel& m) {
    Json doc;
    doc["format"] = kFormatName;
    doc["format_version"] = kModelFormatVersion;
    doc["schema"] = schema_to_json(m.schema);

    const auto& hp = m.meta.hyperparams;
    Json hj;
    hj["rounds"] = hp.rounds;
    hj["max_depth"] = hp.max_depth;
    hj["learning_rate"] = hp.learning_rate;
    hj["l2_lambda"] = hp.l2_lambda;
    hj["gamma"] = hp.gamma;
    hj["min_child_weight"] = hp.min_child_weight;
    hj["seed"] = hp.seed;
    doc["hyperparams"] = hj;

    Json tj;
    tj["corpus_checksum"] = m.meta.corpus_checksum;
    tj["example_count"] = m.meta.example_count;
    doc["training"] = tj;

    doc["base_score"] = m.base_score;
    Json trees = Json::array();
    for (const auto& tree : m.trees) {
        Json nodes = Json::array();
        for (const auto& n : tree.nodes) nodes.push_back(node_to_json(n));
        trees.push_back(Json{{"nodes", std::move(nodes)}});
    }
    doc["trees"] = std::move(trees);
    return doc;
}

// Checksum input: the compact dump of every field except "checksum", in
// document order. Doubles dump in shortest round-trip form, so the value is
// stable through save/load.
std::uint64_t body_checksum(const Json& body) { return fnv1a64(body.dump()); }

template <typename T>
T field(const Json& j, const char* key) {
    if (!j.contains(key)) throw CorruptModel(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw CorruptModel(std::string("field '") + key + "' has the wrong type");
    }
}

void validate_tree(const Tree& tree, std::size_t feature_count) {
    const auto count = static_cast<int>(tree.nodes.size());
    if (count == 0) throw CorruptModel("empty tree");
    std::vector<int> parents(tree.nodes.size(), 0);
    for (const auto& n : tree.nodes) {
        if (n.is_leaf()) continue;
        if (static_cast<std::size_t>(n.feature) >= feature_count) {
            throw CorruptModel("node feature index out of range");
        }
        for (int child : {n.left, n.right}) {
            if (child <= 0 || child >= count) throw CorruptModel("node child index out of range");
            if (++parents[static_cast<std::size_t>(child)] > 1) throw CorruptModel("node has two parents");
        }
    }
}

}  // namespace

FeatureSchema FeatureSchema::fused(std::size_t embed_dim, std::string_view embedder_family) {
    FeatureSchema s;
    s.embed_dim = embed_dim;
    s.feature_count = embed_dim + kSyntacticSlots;
    s.embedder_family = std::string(embedder_family);

    std::string canon = "fused;embed_dim=" + std::to_string(embed_dim) +
                        ";embedder=" + s.embedder_family + ";slots=";
    for (auto name : kSlotNames) {
        canon += name;
        canon += ',';
    }
    canon += ";categories=";
    for (auto c : kAllCategories) {
        canon += category_name(c);
        canon += ',';
    }
    s.fingerprint = to_hex64(fnv1a64(canon));
    return s;
}

FeatureSchema FeatureSchema::raw(std::size_t feature_count) {
    FeatureSchema s;
    s.feature_count = feature_count;
    s.embedder_family = "raw";
    s.fingerprint = to_hex64(fnv1a64("raw;features=" + std::to_string(feature_count)));
    return s;
}

std::string GbdtModel::model_id() const {
    return "gbdt-" + to_hex64(body_checksum(body_to_json(*this))).substr(0, 12);
}

std::string serialize_model(const GbdtModel& model) {
    Json doc = body_to_json(model);
    const auto checksum = body_checksum(doc);
    doc["checksum"] = "fnv1a64:" + to_hex64(checksum);
    return doc.dump(1) + "\n";
}

GbdtModel deserialize_model(std::string_view text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptModel(std::string("model file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw CorruptModel("model document must be a JSON object");
    if (field<std::string>(doc, "format") != kFormatName) throw CorruptModel("not a metric-gate model file");
    const int version = field<int>(doc, "format_version");
    if (version != kModelFormatVersion) {
        throw FormatVersionMismatch("model format version " + std::to_string(version) +
                                    ", this build reads version " +
                                    std::to_string(kModelFormatVersion));
    }
    const auto stored = field<std::string>(doc, "checksum");
    doc.erase("checksum");
    if (stored != "fnv1a64:" + to_hex64(body_checksum(doc))) {
        throw CorruptModel("model checksum mismatch");
    }

    GbdtModel m;
    const Json& sj = field<Json>(doc, "schema");
    m.schema.fingerprint = field<std::string>(sj, "fingerprint");
    m.schema.feature_count = field<std::size_t>(sj, "feature_count");
    m.schema.embed_dim = field<std::size_t>(sj, "embed_dim");
    m.schema.embedder_family = field<std::string>(sj, "embedder");

    const Json& hj = field<Json>(doc, "hyperparams");
    auto& hp = m.meta.hyperparams;
    hp.rounds = field<int>(hj, "rounds");
    hp.max_depth = field<int>(hj, "max_depth");
    hp.learning_rate = field<double>(hj, "learning_rate");
    hp.l2_lambda = field<double>(hj, "l2_lambda");
    hp.gamma = field<double>(hj, "gamma");
    hp.min_child_weight = field<double>(hj, "min_child_weight");
    hp.seed = field<std::uint64_t>(hj, "seed");

    const Json& tj = field<Json>(doc, "training");
    m.meta.corpus_checksum = field<std::string>(tj, "corpus_checksum");
    m.meta.example_count = field<std::size_t>(tj, "example_count");

    m.base_score = field<double>(doc, "base_score");
    for (const auto& tree_json : field<Json>(doc, "trees")) {
        Tree tree;
        for (const auto& nj : field<Json>(tree_json, "nodes")) {
            TreeNode n;
            if (nj.contains("leaf")) {
                n.weight = field<double>(nj, "leaf");
            } else {
                n.feature = field<int>(nj, "feature");
                n.threshold = field<double>(nj, "threshold");
                n.left = field<int>(nj, "left");
                n.right = field<int>(nj, "right");
                n.gain = field<double>(nj, "gain");
                if (n.feature < 0) throw CorruptModel("negative feature index");
            }
            n.sum_grad = field<double>(nj, "sum_grad");
            n.sum_hess = field<double>(nj, "sum_hess");
            tree.nodes.push_back(n);
        }
        validate_tree(tree, m.schema.feature_count);
        m.trees.push_back(std::move(tree));
    }
    return m;
}

void save_model(const GbdtModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write model file " + path.string());
    out << serialize_model(model);
    if (!out) throw IoError("failed writing model file " + path.string());
}

GbdtModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read model file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_model(buf.str());
}

}  // namespace mgate
