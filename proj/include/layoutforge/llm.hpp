#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace layoutforge {

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string text;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    std::string model_id = "gpt-4o";
    double temperature = 0.0;
    int max_tokens = 4096;
    // Template id the request was rendered from. Routing hint for scripted
    // providers; not part of the fingerprint.
    std::string purpose;

    void check() const;
};

// Stable content hash (SHA-256 hex) of model id and messages.
std::string fingerprint(const ChatRequest& request);

struct CassetteEntry {
    std::string fingerprint;
    std::string model_id;
    std::vector<ChatMessage> messages;
    std::string response;
    std::string timestamp;
    std::string provider;
};

// Append-only fingerprint -> response store backed by a JSONL file.
class Cassette {
  public:
    Cassette() = default;

    // Missing files load as empty cassettes when `allow_missing` is set.
    static Cassette load(const std::filesystem::path& path, bool allow_missing = false);
    static Cassette parse(std::string_view jsonl, const std::string& origin = "cassette");

    const CassetteEntry* find(const std::string& fingerprint) const;

    // Inserts a new entry. Re-inserting an identical request is a no-op;
    // a fingerprint clash between different requests throws SchemaError.
    // Returns true when the entry was new.
    bool insert(CassetteEntry entry);

    std::size_t size() const { return order_.size(); }
    std::vector<const CassetteEntry*> entries() const;

    static std::string to_line(const CassetteEntry& entry);

  private:
    std::map<std::string, CassetteEntry> entries_;
    std::vector<std::string> order_;
};

class Provider {
  public:
    virtual ~Provider() = default;
    virtual std::string name() const = 0;
    virtual std::string complete(const ChatRequest& request) = 0;
};

struct HttpProviderConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string api_key_env = "LAYOUTFORGE_API_KEY";
    std::chrono::seconds timeout{60};
};

// OpenAI-compatible chat-completion endpoint.
class HttpProvider : public Provider {
  public:
    explicit HttpProvider(HttpProviderConfig config);

    std::string name() const override;
    std::string complete(const ChatRequest& request) override;

  private:
    HttpProviderConfig config_;
};

enum class GatewayMode { Live, Replay, Record, Mock };

std::string_view to_string(GatewayMode mode);
GatewayMode parse_gateway_mode(std::string_view token);

class Gateway {
  public:
    // Live and Mock need a provider; Replay needs a cassette path; Record needs both.
    Gateway(GatewayMode mode, std::unique_ptr<Provider> provider, std::filesystem::path cassette_path = {});

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    std::string complete(const ChatRequest& request);

    GatewayMode mode() const { return mode_; }
    const std::string& model_id() const { return model_id_; }
    void set_model_id(std::string model_id) { model_id_ = std::move(model_id); }

    // Builds a single-user-message request with the gateway's model id.
    ChatRequest make_request(std::string prompt, std::string purpose) const;

    std::vector<std::string> fingerprints_used() const;
    // Cassette entries served or recorded so far, in first-use order.
    std::vector<CassetteEntry> entries_used() const;

  private:
    void note_use(const CassetteEntry& entry);

    GatewayMode mode_;
    std::unique_ptr<Provider> provider_;
    std::filesystem::path cassette_path_;
    Cassette cassette_;
    std::string model_id_ = "gpt-4o";

    mutable std::mutex mutex_;
    std::vector<CassetteEntry> used_;
    std::map<std::string, std::size_t> used_index_;
};

// Replaces every <placeholder> token in `text`. Tokens are '<' + lowercase
// identifier + '>'; closing-style tags such as "</pose>" are left alone.
// Throws InvariantError("<name> unbound") on a missing substitution.
std::string render_template_text(std::string_view text, const std::map<std::string, std::string>& substitutions);

// Renders one of the bundled prompt templates by id.
std::string render_template(std::string_view template_id, const std::map<std::string, std::string>& substitutions);

// Text strictly between the first and second occurrences of `tag`, trimmed.
// Throws ParseError("tag not found: <tag>") when fewer than two occurrences exist.
std::string parse_tagged_block(std::string_view text, std::string_view tag);

std::string trim(std::string_view text);

// Python-style list literal: ['a', 'b'].
std::string python_list(const std::vector<std::string>& items);

}  // namespace layoutforge
