#include "digknow/gateway.hpp"

#include <cctype>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "digknow/errors.hpp"

namespace digknow {

namespace {

const std::map<std::string, std::string>& builtin_bodies() {
    static const std::map<std::string, std::string> bodies{
        {"action_extract",
         "The scene graph of the first frame is:\n"
         "{first_graph}\n"
         "The scene graph of the second frame is:\n"
         "{second_graph}\n"
         "\n"
         "Q: What action did this human perform? Answer with a single short "
         "imperative sentence.{format_reminder}"},
        {"pattern_distill",
         "Initial scene graph:\n"
         "{initial_graph}\n"
         "\n"
         "Action and resulting scene graphs:\n"
         "{action_graph_list}\n"
         "\n"
         "Q: 1. Concretize this task. 2. Summarize patterns for each object. "
         "Answer as a numbered list; item 1 is the task, each further item is "
         "\"<object>: <pattern>\".{format_reminder}"},
        {"task_retrieve",
         "Current task: {instruction}\n"
         "\n"
         "Previous tasks:\n"
         "{previous_tasks}\n"
         "\n"
         "Q: 1. Does the new task belong to the same category as any previous "
         "tasks? 2. If it does, which specific prior tasks fall into this "
         "category? Answer in the form \"1: Yes, 2: [i, j]\" or \"1: No\"."},
        {"plan",
         "Task: {instruction}\n"
         "\n"
         "Initial scene graph:\n"
         "{initial_graph}\n"
         "\n"
         "Pattern knowledge:\n"
         "{pattern_knowledge}\n"
         "\n"
         "Q: Please generate an action sequence to complete the task. Answer as "
         "a numbered list of actions separated by semicolons.{format_reminder}"},
        {"plan_consistency",
         "Task: {instruction}\n"
         "\n"
         "Pattern knowledge:\n"
         "{pattern_knowledge}\n"
         "\n"
         "Planned actions:\n"
         "{planned_actions}\n"
         "\n"
         "Q: 1. Validate compliance with pattern knowledge; 2. if not, summarize "
         "accordingly. Answer \"1. Yes.\" or \"1. No. 2. Explanation: "
         "<summary>\"."},
        {"plan_precondition",
         "Action and preceding scene graphs:\n"
         "{knowledge_actions}\n"
         "\n"
         "Initial scene graph:\n"
         "{initial_graph}\n"
         "\n"
         "Planned actions:\n"
         "{planned_actions}\n"
         "\n"
         "Q: 1. Infer the scene graph sequence based on the planned action and "
         "the initial scene graph. 2. Determine compliance with execution "
         "conditions based on the provided action, its preceding scene graph, "
         "and the inferred preceding scene graph. 3. If not compliant, summarize "
         "the discrepancies. Answer item 1 as one three-line scene graph per "
         "planned action separated by blank lines, item 2 as Yes or No, item 3 "
         "as \"Explanation: <summary>\"."},
        {"plan_revise",
         "Planned actions:\n"
         "{planned_actions}\n"
         "\n"
         "Failure explanation:\n"
         "{failure_explanations}\n"
         "\n"
         "Q: Revise plans based on failure explanation. Answer as a numbered "
         "list of actions separated by semicolons.{format_reminder}"},
        {"execution_check",
         "Action and resulting scene graphs:\n"
         "{knowledge_actions}\n"
         "\n"
         "Executed action and the resulting scene graph:\n"
         "{executed_action}\n"
         "{resulting_graph}\n"
         "\n"
         "Q: 1. Based on the provided action and its corresponding resulting "
         "scene graph, whether the executed action is successful. 2. If not, "
         "explain the failure and generate the correction plan. Answer "
         "\"1. Yes.\" or \"1. No. 2. Explanation: <explanation>. Correction "
         "plan: 1. <action>; 2. <action>\"."},
    };
    return bodies;
}

} // namespace

TemplateRegistry TemplateRegistry::builtin() {
    TemplateRegistry r;
    r.bodies_ = builtin_bodies();
    return r;
}

TemplateRegistry TemplateRegistry::load_dir(const std::string& dir) {
    TemplateRegistry r = builtin();
    for (const auto& id : template_ids()) {
        const std::filesystem::path p = std::filesystem::path(dir) / (id + ".txt");
        if (!std::filesystem::exists(p)) continue;
        std::ifstream in(p);
        std::ostringstream body;
        body << in.rdbuf();
        std::string text = body.str();
        while (!text.empty() && text.back() == '\n') text.pop_back();
        r.bodies_[id] = std::move(text);
    }
    return r;
}

const std::string& TemplateRegistry::body(const std::string& template_id) const {
    auto it = bodies_.find(template_id);
    if (it == bodies_.end())
        throw GatewayError("unknown template id: " + template_id);
    return it->second;
}

std::string TemplateRegistry::render(
    const std::string& template_id,
    const std::map<std::string, std::string>& placeholders) const {
    const std::string& tpl = body(template_id);
    std::string out;
    out.reserve(tpl.size());
    size_t pos = 0;
    while (pos < tpl.size()) {
        const size_t open = tpl.find('{', pos);
        if (open == std::string::npos) {
            out.append(tpl, pos, std::string::npos);
            break;
        }
        out.append(tpl, pos, open - pos);
        const size_t close = tpl.find('}', open);
        if (close == std::string::npos)
            throw GatewayError("unterminated placeholder in template " + template_id);
        const std::string name = tpl.substr(open + 1, close - open - 1);
        auto it = placeholders.find(name);
        if (it == placeholders.end())
            throw MissingPlaceholder("missing placeholder '" + name + "' for template " +
                                     template_id);
        out += it->second;
        pos = close + 1;
    }
    return out;
}

std::string render_numbered(const std::vector<std::string>& items) {
    std::ostringstream out;
    for (size_t i = 0; i < items.size(); ++i) {
        if (i) out << "\n";
        out << (i + 1) << ". " << items[i];
    }
    return out.str();
}

std::string placeholder_digest(const std::map<std::string, std::string>& placeholders) {
    uint64_t h = 1469598103934665603ull;
    auto mix = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h ^= 0xff;
        h *= 1099511628211ull;
    };
    for (const auto& [k, v] : placeholders) {
        mix(k);
        mix(v);
    }
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

void ScriptedClient::add_canned(const std::string& template_id,
                                const std::map<std::string, std::string>& placeholders,
                                std::string response) {
    canned_[{template_id, placeholder_digest(placeholders)}] = std::move(response);
}

void ScriptedClient::add_wildcard(const std::string& template_id, std::string response) {
    wildcards_[template_id] = std::move(response);
}

std::string ScriptedClient::complete(const std::string& template_id,
                                     const std::map<std::string, std::string>& placeholders,
                                     const DecodingParams&) {
    auto it = canned_.find({template_id, placeholder_digest(placeholders)});
    if (it != canned_.end()) return it->second;
    if (fallback_) {
        if (auto r = fallback_(template_id, placeholders)) return *r;
    }
    auto wit = wildcards_.find(template_id);
    if (wit != wildcards_.end()) return wit->second;
    throw GatewayError("scripted backend has no response for template " + template_id);
}

RecordingClient::RecordingClient(std::shared_ptr<ChatClient> inner,
                                 std::shared_ptr<const TemplateRegistry> registry,
                                 std::string log_path)
    : inner_(std::move(inner)), registry_(std::move(registry)),
      log_path_(std::move(log_path)) {}

std::string RecordingClient::complete(
    const std::string& template_id,
    const std::map<std::string, std::string>& placeholders, const DecodingParams& params) {
    const std::string prompt = registry_->render(template_id, placeholders);
    const auto t0 = std::chrono::steady_clock::now();
    const std::string response = inner_->complete(template_id, placeholders, params);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    std::lock_guard<std::mutex> lock(mutex_);
    std::ofstream out(log_path_, std::ios::app);
    nlohmann::json j{{"template_id", template_id},
                     {"prompt", prompt},
                     {"response", response},
                     {"latency_ms", static_cast<int>(ms)}};
    out << j.dump() << "\n";
    return response;
}

ReplayClient::ReplayClient(std::shared_ptr<const TemplateRegistry> registry,
                           std::string log_path)
    : registry_(std::move(registry)) {
    std::ifstream in(log_path);
    if (!in) throw GatewayError("cannot open replay log: " + log_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        records_.push_back({j.at("template_id").get<std::string>(),
                            j.at("prompt").get<std::string>(),
                            j.at("response").get<std::string>(),
                            j.value("latency_ms", 0)});
    }
    consumed_.assign(records_.size(), false);
}

std::string ReplayClient::complete(const std::string& template_id,
                                   const std::map<std::string, std::string>& placeholders,
                                   const DecodingParams&) {
    const std::string prompt = registry_->render(template_id, placeholders);
    std::lock_guard<std::mutex> lock(mutex_);
    for (size_t i = 0; i < records_.size(); ++i) {
        if (consumed_[i]) continue;
        if (records_[i].template_id == template_id && records_[i].prompt == prompt) {
            consumed_[i] = true;
            return records_[i].response;
        }
    }
    throw GatewayError("replay log has no response for template " + template_id);
}

size_t ReplayClient::remaining() const {
    std::lock_guard<std::mutex> lock(mutex_);
    size_t n = 0;
    for (bool c : consumed_)
        if (!c) ++n;
    return n;
}

// --- parsers ---

namespace {

std::string strip(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string strip_trailing_period(std::string s) {
    s = strip(s);
    while (!s.empty() && s.back() == '.') {
        s.pop_back();
        s = strip(s);
    }
    return s;
}

// first standalone Yes/No token, case-insensitive
std::optional<bool> find_yes_no(const std::string& text) {
    for (size_t i = 0; i < text.size(); ++i) {
        auto word_at = [&](const char* w) {
            const size_t len = std::strlen(w);
            if (i + len > text.size()) return false;
            for (size_t k = 0; k < len; ++k)
                if (std::tolower(static_cast<unsigned char>(text[i + k])) != w[k])
                    return false;
            if (i > 0 && std::isalnum(static_cast<unsigned char>(text[i - 1]))) return false;
            if (i + len < text.size() &&
                std::isalnum(static_cast<unsigned char>(text[i + len])))
                return false;
            return true;
        };
        if (word_at("yes")) return true;
        if (word_at("no")) return false;
    }
    return std::nullopt;
}

} // namespace

std::vector<std::string> parse_action_list(const std::string& text) {
    std::vector<std::string> items;
    size_t i = 0;
    while (i < text.size()) {
        // numbered marker: digits followed by '.' or ')' and whitespace
        if (std::isdigit(static_cast<unsigned char>(text[i])) &&
            (i == 0 || !std::isalnum(static_cast<unsigned char>(text[i - 1])))) {
            size_t j = i;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            if (j < text.size() && (text[j] == '.' || text[j] == ')') &&
                j + 1 < text.size() && text[j + 1] == ' ') {
                size_t start = j + 2;
                size_t end = text.find_first_of(";\n", start);
                if (end == std::string::npos) end = text.size();
                std::string item = strip_trailing_period(text.substr(start, end - start));
                if (!item.empty()) items.push_back(item);
                i = end + 1;
                continue;
            }
        }
        ++i;
    }
    if (items.empty())
        throw UnparseableResponse("no numbered action item found in response");
    return items;
}

std::pair<bool, std::vector<int>> parse_yes_no_indices(const std::string& text) {
    auto yn = find_yes_no(text);
    if (!yn) throw UnparseableResponse("no Yes/No token in response");
    if (!*yn) return {false, {}};
    std::vector<int> indices;
    const size_t open = text.find('[');
    if (open != std::string::npos) {
        const size_t close = text.find(']', open);
        if (close == std::string::npos)
            throw UnparseableResponse("unterminated index list in response");
        std::string inner = text.substr(open + 1, close - open - 1);
        std::istringstream in(inner);
        std::string tok;
        while (std::getline(in, tok, ',')) {
            tok = strip(tok);
            if (tok.empty()) continue;
            try {
                indices.push_back(std::stoi(tok));
            } catch (const std::exception&) {
                throw UnparseableResponse("non-integer index in response: " + tok);
            }
        }
    }
    return {true, indices};
}

Verdict parse_verdict(const std::string& text) {
    auto yn = find_yes_no(text);
    if (!yn) throw UnparseableResponse("no Yes/No token in verdict response");
    Verdict v;
    v.success = *yn;
    if (v.success) return v;

    const size_t expl = text.find("Explanation:");
    if (expl == std::string::npos)
        throw UnparseableResponse("verdict is No but has no Explanation section");
    const size_t corr = text.find("Correction plan:");
    const size_t expl_start = expl + std::strlen("Explanation:");
    const size_t expl_end = corr == std::string::npos ? text.size() : corr;
    v.explanation = strip_trailing_period(text.substr(expl_start, expl_end - expl_start));
    if (v.explanation.empty())
        throw UnparseableResponse("verdict is No but the explanation is empty");
    if (corr != std::string::npos)
        v.correction = parse_action_list(text.substr(corr + std::strlen("Correction plan:")));
    return v;
}

std::vector<SceneGraph> parse_graph_sequence(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);

    std::vector<SceneGraph> graphs;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].rfind("Objects and states:", 0) == 0 && i + 2 < lines.size()) {
            graphs.push_back(
                parse_graph_text(lines[i] + "\n" + lines[i + 1] + "\n" + lines[i + 2]));
            i += 2;
        }
    }
    if (graphs.empty())
        throw UnparseableResponse("no scene graph blocks found in response");
    return graphs;
}

} // namespace digknow
