#include "layoutforge/llm.hpp"

#include <array>
#include <cctype>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include "layoutforge/assets.hpp"
#include "layoutforge/errors.hpp"

namespace layoutforge {

using nlohmann::json;

namespace {

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 failed");
    }
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) {
        out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return out.str();
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

bool same_request(const CassetteEntry& a, const CassetteEntry& b) {
    return a.model_id == b.model_id && a.messages == b.messages;
}

}  // namespace

void ChatRequest::check() const {
    bool has_user = false;
    for (const auto& m : messages) {
        if (m.role != "system" && m.role != "user" && m.role != "assistant") {
            throw InvariantError("unknown chat role: " + m.role);
        }
        has_user = has_user || m.role == "user";
    }
    if (!has_user) throw InvariantError("chat request needs at least one user message");
}

std::string fingerprint(const ChatRequest& request) {
    // Length-prefixed fields keep the encoding unambiguous.
    std::string canonical;
    auto field = [&canonical](std::string_view s) {
        canonical += std::to_string(s.size());
        canonical += ':';
        canonical += s;
    };
    field(request.model_id);
    for (const auto& m : request.messages) {
        field(m.role);
        field(m.text);
    }
    return sha256_hex(canonical);
}

Cassette Cassette::load(const std::filesystem::path& path, bool allow_missing) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (allow_missing && !std::filesystem::exists(path)) return Cassette{};
        throw GatewayError("cannot read cassette: " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

Cassette Cassette::parse(std::string_view jsonl, const std::string& origin) {
    Cassette cassette;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= jsonl.size()) {
        std::size_t end = jsonl.find('\n', start);
        if (end == std::string_view::npos) end = jsonl.size();
        const std::string_view line = jsonl.substr(start, end - start);
        ++line_no;
        start = end + 1;
        if (trim(line).empty()) {
            if (end == jsonl.size()) break;
            continue;
        }
        const std::string where = origin + ":" + std::to_string(line_no);
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            // A torn final line from an interrupted recording is ignored.
            if (end == jsonl.size()) break;
            throw SchemaError(where + ": " + e.what());
        }
        try {
            CassetteEntry entry;
            entry.fingerprint = record.at("fingerprint").get<std::string>();
            entry.model_id = record.at("model_id").get<std::string>();
            for (const auto& m : record.at("messages")) {
                entry.messages.push_back({m.at("role").get<std::string>(), m.at("text").get<std::string>()});
            }
            entry.response = record.at("response").get<std::string>();
            entry.timestamp = record.value("timestamp", "");
            entry.provider = record.value("provider", "");
            ChatRequest req;
            req.model_id = entry.model_id;
            req.messages = entry.messages;
            if (fingerprint(req) != entry.fingerprint) {
                throw SchemaError("fingerprint does not match recorded request");
            }
            cassette.insert(std::move(entry));
        } catch (const json::exception& e) {
            throw SchemaError(where + ": " + e.what());
        } catch (const SchemaError& e) {
            throw SchemaError(where + ": " + e.what());
        }
        if (end == jsonl.size()) break;
    }
    return cassette;
}

const CassetteEntry* Cassette::find(const std::string& fp) const {
    auto it = entries_.find(fp);
    return it == entries_.end() ? nullptr : &it->second;
}

bool Cassette::insert(CassetteEntry entry) {
    auto it = entries_.find(entry.fingerprint);
    if (it != entries_.end()) {
        if (!same_request(it->second, entry)) {
            throw SchemaError("fingerprint collision: " + entry.fingerprint);
        }
        return false;
    }
    order_.push_back(entry.fingerprint);
    std::string key = entry.fingerprint;
    entries_.emplace(std::move(key), std::move(entry));
    return true;
}

std::vector<const CassetteEntry*> Cassette::entries() const {
    std::vector<const CassetteEntry*> out;
    out.reserve(order_.size());
    for (const auto& fp : order_) out.push_back(&entries_.at(fp));
    return out;
}

std::string Cassette::to_line(const CassetteEntry& entry) {
    json record;
    record["fingerprint"] = entry.fingerprint;
    record["model_id"] = entry.model_id;
    json messages = json::array();
    for (const auto& m : entry.messages) messages.push_back({{"role", m.role}, {"text", m.text}});
    record["messages"] = std::move(messages);
    record["response"] = entry.response;
    record["timestamp"] = entry.timestamp;
    record["provider"] = entry.provider;
    return record.dump() + "\n";
}

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {}

std::string HttpProvider::name() const { return "http:" + config_.endpoint; }

std::string HttpProvider::complete(const ChatRequest& request) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw GatewayError("credential variable " + config_.api_key_env + " is not set");
    }

    // Split "scheme://host[:port]/path".
    const std::string& url = config_.endpoint;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw GatewayError("endpoint needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    json body;
    body["model"] = request.model_id;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    body["messages"] = json::array();
    for (const auto& m : request.messages) body["messages"].push_back({{"role", m.role}, {"content", m.text}});

    httplib::Client client(origin);
    const auto secs = static_cast<time_t>(config_.timeout.count());
    client.set_connection_timeout(secs, 0);
    client.set_read_timeout(secs, 0);
    client.set_write_timeout(secs, 0);
    client.set_bearer_token_auth(key);

    auto res = client.Post(path, body.dump(), "application/json");
    if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
            throw TimeoutError("provider timeout after " + std::to_string(config_.timeout.count()) + " s");
        }
        throw GatewayError("provider request failed: " + httplib::to_string(err));
    }
    if (res->status < 200 || res->status >= 300) {
        throw ProviderError(res->status, "provider error: HTTP " + std::to_string(res->status));
    }
    try {
        const json reply = json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ProviderError(res->status, std::string("unexpected provider response: ") + e.what());
    }
}

std::string_view to_string(GatewayMode mode) {
    switch (mode) {
        case GatewayMode::Live: return "live";
        case GatewayMode::Replay: return "replay";
        case GatewayMode::Record: return "record";
        case GatewayMode::Mock: return "mock";
    }
    return "?";
}

GatewayMode parse_gateway_mode(std::string_view token) {
    if (token == "live") return GatewayMode::Live;
    if (token == "replay") return GatewayMode::Replay;
    if (token == "record") return GatewayMode::Record;
    if (token == "mock") return GatewayMode::Mock;
    throw InvariantError("unknown gateway mode: " + std::string(token));
}

Gateway::Gateway(GatewayMode mode, std::unique_ptr<Provider> provider, std::filesystem::path cassette_path)
    : mode_(mode), provider_(std::move(provider)), cassette_path_(std::move(cassette_path)) {
    const bool needs_provider = mode != GatewayMode::Replay;
    const bool needs_cassette = mode == GatewayMode::Replay || mode == GatewayMode::Record;
    if (needs_provider && !provider_) {
        throw InvariantError(std::string(to_string(mode)) + " mode needs a provider");
    }
    if (needs_cassette && cassette_path_.empty()) {
        throw InvariantError(std::string(to_string(mode)) + " mode needs a cassette path");
    }
    if (mode == GatewayMode::Replay) {
        cassette_ = Cassette::load(cassette_path_);
        provider_.reset();
    } else if (mode == GatewayMode::Record) {
        cassette_ = Cassette::load(cassette_path_, /*allow_missing=*/true);
    }
}

ChatRequest Gateway::make_request(std::string prompt, std::string purpose) const {
    ChatRequest req;
    req.model_id = model_id_;
    req.messages.push_back({"user", std::move(prompt)});
    req.purpose = std::move(purpose);
    return req;
}

void Gateway::note_use(const CassetteEntry& entry) {
    if (used_index_.count(entry.fingerprint)) return;
    used_index_[entry.fingerprint] = used_.size();
    used_.push_back(entry);
}

std::string Gateway::complete(const ChatRequest& request) {
    request.check();
    const std::string fp = fingerprint(request);

    auto make_entry = [&](std::string response) {
        CassetteEntry e;
        e.fingerprint = fp;
        e.model_id = request.model_id;
        e.messages = request.messages;
        e.response = std::move(response);
        e.timestamp = utc_timestamp();
        e.provider = provider_ ? provider_->name() : "cassette";
        return e;
    };

    switch (mode_) {
        case GatewayMode::Replay: {
            const CassetteEntry* hit = cassette_.find(fp);
            if (hit == nullptr) throw CassetteMissError(fp);
            std::lock_guard lock(mutex_);
            note_use(*hit);
            return hit->response;
        }
        case GatewayMode::Record: {
            std::lock_guard lock(mutex_);
            if (const CassetteEntry* hit = cassette_.find(fp)) {
                note_use(*hit);
                return hit->response;
            }
            CassetteEntry entry = make_entry(provider_->complete(request));
            std::ofstream out(cassette_path_, std::ios::binary | std::ios::app);
            if (!out) throw GatewayError("cannot append to cassette: " + cassette_path_.string());
            out << Cassette::to_line(entry);
            out.flush();
            note_use(entry);
            cassette_.insert(entry);
            return entry.response;
        }
        case GatewayMode::Live:
        case GatewayMode::Mock: {
            CassetteEntry entry = make_entry(provider_->complete(request));
            std::lock_guard lock(mutex_);
            note_use(entry);
            return entry.response;
        }
    }
    throw GatewayError("unreachable gateway mode");
}

std::vector<std::string> Gateway::fingerprints_used() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    out.reserve(used_.size());
    for (const auto& e : used_) out.push_back(e.fingerprint);
    return out;
}

std::vector<CassetteEntry> Gateway::entries_used() const {
    std::lock_guard lock(mutex_);
    return used_;
}

std::string render_template_text(std::string_view text, const std::map<std::string, std::string>& substitutions) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '<' && i + 1 < text.size() && std::islower(static_cast<unsigned char>(text[i + 1]))) {
            std::size_t j = i + 1;
            while (j < text.size() &&
                   (std::islower(static_cast<unsigned char>(text[j])) || text[j] == '_' ||
                    std::isdigit(static_cast<unsigned char>(text[j])))) {
                ++j;
            }
            if (j < text.size() && text[j] == '>') {
                const std::string key(text.substr(i + 1, j - i - 1));
                auto it = substitutions.find(key);
                if (it == substitutions.end()) throw InvariantError("<" + key + "> unbound");
                out += it->second;
                i = j + 1;
                continue;
            }
        }
        out += text[i];
        ++i;
    }
    return out;
}

std::string render_template(std::string_view template_id, const std::map<std::string, std::string>& substitutions) {
    const std::string asset_id = "templates/" + std::string(template_id) + ".txt";
    if (!assets::contains(asset_id)) throw InvariantError("unknown template: " + std::string(template_id));
    return render_template_text(assets::get(asset_id), substitutions);
}

std::string trim(std::string_view text) {
    std::size_t b = 0;
    std::size_t e = text.size();
    while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
    return std::string(text.substr(b, e - b));
}

std::string parse_tagged_block(std::string_view text, std::string_view tag) {
    const auto first = text.find(tag);
    if (first == std::string_view::npos) throw ParseError("tag not found: " + std::string(tag));
    const auto begin = first + tag.size();
    const auto second = text.find(tag, begin);
    if (second == std::string_view::npos) throw ParseError("tag not found: " + std::string(tag));
    return trim(text.substr(begin, second - begin));
}

std::string python_list(const std::vector<std::string>& items) {
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += '\'';
        out += items[i];
        out += '\'';
    }
    out += ']';
    return out;
}

}  // namespace layoutforge
