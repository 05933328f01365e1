#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "uab/error.hpp"
#include "uab/upscalers.hpp"

extern char** environ;

namespace uab {

namespace {

constexpr std::size_t kTailBytes = 2000;

class CaptureFile {
public:
    CaptureFile() {
        std::string name = (std::filesystem::temp_directory_path() / "uab-proc-XXXXXX").string();
        fd_ = ::mkstemp(name.data());
        if (fd_ < 0) {
            throw ProcessError(fmt::format("cannot create capture file: {}", std::strerror(errno)));
        }
        path_ = std::move(name);
    }
    ~CaptureFile() {
        ::close(fd_);
        ::unlink(path_.c_str());
    }
    CaptureFile(const CaptureFile&) = delete;
    CaptureFile& operator=(const CaptureFile&) = delete;

    [[nodiscard]] int fd() const { return fd_; }

    [[nodiscard]] std::string tail() const {
        std::ifstream in(path_, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        std::string s = buf.str();
        return s.size() > kTailBytes ? s.substr(s.size() - kTailBytes) : s;
    }

private:
    int fd_ = -1;
    std::string path_;
};

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv, std::chrono::milliseconds timeout) {
    if (argv.empty() || argv[0].empty()) {
        throw ProcessError("empty command");
    }
    std::vector<char*> cargv;
    for (const auto& a : argv) {
        cargv.push_back(const_cast<char*>(a.c_str()));
    }
    cargv.push_back(nullptr);

    CaptureFile capture;
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
    posix_spawn_file_actions_adddup2(&actions, capture.fd(), STDOUT_FILENO);
    posix_spawn_file_actions_adddup2(&actions, capture.fd(), STDERR_FILENO);
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attr, 0);

    pid_t pid = 0;
    const int rc = ::posix_spawnp(&pid, cargv[0], &actions, &attr, cargv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    posix_spawnattr_destroy(&attr);
    if (rc != 0) {
        throw ProcessError(fmt::format("cannot start {}: {}", argv[0], std::strerror(rc)));
    }

    const auto deadline = std::chrono::steady_clock::now() + timeout;
    int status = 0;
    for (;;) {
        const pid_t w = ::waitpid(pid, &status, WNOHANG);
        if (w == pid) {
            break;
        }
        if (w < 0 && errno != EINTR) {
            throw ProcessError(fmt::format("waitpid failed for {}: {}", argv[0], std::strerror(errno)));
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            ::kill(-pid, SIGKILL);
            while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
            }
            throw ProcessError(fmt::format("{} timed out after {} ms", argv[0], timeout.count()));
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (WIFSIGNALED(status)) {
        throw ProcessError(fmt::format("{} killed by signal {}: {}", argv[0], WTERMSIG(status), capture.tail()));
    }
    ProcessResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.output_tail = capture.tail();
    return result;
}

}  // namespace uab
