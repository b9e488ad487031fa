#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>

#include "metric_gate/embedder.hpp"
#include "metric_gate/errors.hpp"

extern char** environ;

namespace mgate {
namespace {

// Removes the temporary input file on scope exit.
class TempFile {
public:
    TempFile() {
        const char* dir = std::getenv("TMPDIR");
        path_ = std::string(dir && *dir ? dir : "/tmp") + "/metric-gate-embed-XXXXXX";
        fd_ = ::mkstemp(path_.data());
        if (fd_ < 0) throw ProviderError("cannot create temporary file: " + std::string(std::strerror(errno)));
    }
    ~TempFile() {
        if (fd_ >= 0) ::close(fd_);
        ::unlink(path_.c_str());
    }
    TempFile(const TempFile&) = delete;
    TempFile& operator=(const TempFile&) = delete;

    void write_all(std::string_view data) {
        while (!data.empty()) {
            const auto n = ::write(fd_, data.data(), data.size());
            if (n < 0) {
                if (errno == EINTR) continue;
                throw ProviderError("cannot write provider input: " + std::string(std::strerror(errno)));
            }
            data.remove_prefix(static_cast<std::size_t>(n));
        }
    }

    const std::string& path() const { return path_; }

private:
    std::string path_;
    int fd_ = -1;
};

std::vector<double> parse_line(std::string_view line, std::size_t dim, std::size_t line_no) {
    std::vector<double> values;
    values.reserve(dim);
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        if (i >= line.size()) break;
        double v = 0.0;
        const auto* first = line.data() + i;
        const auto [ptr, ec] = std::from_chars(first, line.data() + line.size(), v);
        if (ec != std::errc() || (ptr != line.data() + line.size() && *ptr != ' ' &&
                                  *ptr != '\t' && *ptr != '\r')) {
            throw ProviderError("line " + std::to_string(line_no) + ": malformed number");
        }
        if (!std::isfinite(v)) {
            throw ProviderError("line " + std::to_string(line_no) + ": non-finite value");
        }
        values.push_back(v);
        i = static_cast<std::size_t>(ptr - line.data());
    }
    if (values.size() != dim) {
        throw ProviderError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(dim) + " values, got " + std::to_string(values.size()));
    }
    return values;
}

}  // namespace

ExternalEmbedder::ExternalEmbedder(std::filesystem::path command, std::size_t dim)
    : command_(std::move(command)), dim_(dim) {
    if (dim_ == 0) throw ConfigError("embedding dimension must be positive");
}

std::string ExternalEmbedder::provider_id() const {
    return "external:" + command_.filename().string();
}

std::vector<EmbeddingVector> ExternalEmbedder::embed_batch(
    std::span<const NormalizedTokens> batch) const {
    std::lock_guard lock(mu_);
    if (batch.empty()) return {};

    TempFile input;
    std::string payload;
    for (const auto& tokens : batch) {
        payload += tokens.detokenized();
        payload.push_back('\n');
    }
    input.write_all(payload);

    int out_pipe[2];
    if (::pipe(out_pipe) != 0) throw ProviderError("pipe failed: " + std::string(std::strerror(errno)));

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, input.path().c_str(), O_RDONLY, 0);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
    posix_spawn_file_actions_addclose(&actions, out_pipe[0]);
    posix_spawn_file_actions_addclose(&actions, out_pipe[1]);

    const std::string cmd = command_.string();
    char* argv[] = {const_cast<char*>(cmd.c_str()), nullptr};
    pid_t pid = 0;
    const int rc = ::posix_spawnp(&pid, cmd.c_str(), &actions, nullptr, argv, environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(out_pipe[1]);
    if (rc != 0) {
        ::close(out_pipe[0]);
        throw ProviderError("cannot start embedder '" + cmd + "': " + std::strerror(rc));
    }

    std::string output;
    char buf[65536];
    while (true) {
        const auto n = ::read(out_pipe[0], buf, sizeof buf);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;
        output.append(buf, static_cast<std::size_t>(n));
    }
    ::close(out_pipe[0]);

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        throw ProviderError("embedder '" + cmd + "' exited with failure status");
    }

    std::vector<EmbeddingVector> result;
    result.reserve(batch.size());
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < output.size()) {
        auto end = output.find('\n', start);
        if (end == std::string::npos) end = output.size();
        ++line_no;
        if (result.size() == batch.size()) {
            throw ProviderError("embedder returned more lines than queries");
        }
        EmbeddingVector v;
        v.values = parse_line(std::string_view(output).substr(start, end - start), dim_, line_no);
        l2_normalize(v.values);
        v.provider_id = provider_id();
        result.push_back(std::move(v));
        start = end + 1;
    }
    if (result.size() != batch.size()) {
        throw ProviderError("embedder returned " + std::to_string(result.size()) +
                            " lines for " + std::to_string(batch.size()) + " queries");
    }
    return result;
}

}  // namespace mgate
