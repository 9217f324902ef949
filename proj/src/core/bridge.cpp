#include "bridge.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "common.hpp"

namespace rsplat {

namespace {

class PipeTransport : public BridgeTransport {
  public:
    PipeTransport(int read_fd, int write_fd, pid_t child)
        : read_fd_(read_fd), write_fd_(write_fd), child_(child) {}

    ~PipeTransport() override {
        if (write_fd_ >= 0) ::close(write_fd_);
        if (read_fd_ >= 0) ::close(read_fd_);
        if (child_ > 0) {
            int status = 0;
            ::waitpid(child_, &status, 0);
        }
    }

    void write_all(const void* data, size_t len) override {
        const char* p = static_cast<const char*>(data);
        while (len > 0) {
            const ssize_t n = ::write(write_fd_, p, len);
            if (n <= 0) fail(ErrorCode::BridgeClosed, "bridge pipe closed while writing");
            p += n;
            len -= size_t(n);
        }
    }

    void read_all(void* data, size_t len) override {
        char* p = static_cast<char*>(data);
        while (len > 0) {
            const ssize_t n = ::read(read_fd_, p, len);
            if (n <= 0) fail(ErrorCode::BridgeClosed, "bridge pipe closed while reading");
            p += n;
            len -= size_t(n);
        }
    }

  private:
    int read_fd_, write_fd_;
    pid_t child_;
};

class TcpTransport : public BridgeTransport {
  public:
    explicit TcpTransport(int fd) : fd_(fd) {}
    ~TcpTransport() override {
        if (fd_ >= 0) ::close(fd_);
    }

    void write_all(const void* data, size_t len) override {
        const char* p = static_cast<const char*>(data);
        while (len > 0) {
            const ssize_t n = ::send(fd_, p, len, MSG_NOSIGNAL);
            if (n <= 0) fail(ErrorCode::BridgeClosed, "bridge socket closed while writing");
            p += n;
            len -= size_t(n);
        }
    }

    void read_all(void* data, size_t len) override {
        char* p = static_cast<char*>(data);
        while (len > 0) {
            const ssize_t n = ::recv(fd_, p, len, 0);
            if (n <= 0) fail(ErrorCode::BridgeClosed, "bridge socket closed while reading");
            p += n;
            len -= size_t(n);
        }
    }

  private:
    int fd_;
};

std::vector<std::string> split_command(const std::string& command) {
    std::istringstream in(command);
    std::vector<std::string> parts;
    std::string word;
    while (in >> word) parts.push_back(word);
    return parts;
}

}  // namespace

std::unique_ptr<BridgeTransport> spawn_bridge_process(const std::string& command) {
    std::vector<std::string> args = split_command(command);
    require(!args.empty(), ErrorCode::ConfigError, "empty bridge command");

    int to_child[2], from_child[2];
    require(::pipe(to_child) == 0 && ::pipe(from_child) == 0, ErrorCode::BridgeClosed,
            "cannot create bridge pipes");
    const pid_t pid = ::fork();
    require(pid >= 0, ErrorCode::BridgeClosed, "cannot fork bridge process");
    if (pid == 0) {
        ::dup2(to_child[0], STDIN_FILENO);
        ::dup2(from_child[1], STDOUT_FILENO);
        ::close(to_child[0]);
        ::close(to_child[1]);
        ::close(from_child[0]);
        ::close(from_child[1]);
        std::vector<char*> argv;
        for (std::string& a : args) argv.push_back(a.data());
        argv.push_back(nullptr);
        ::execvp(argv[0], argv.data());
        ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    return std::make_unique<PipeTransport>(from_child[0], to_child[1], pid);
}

std::unique_ptr<BridgeTransport> connect_bridge_tcp(const std::string& host, int port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* result = nullptr;
    const std::string port_str = std::to_string(port);
    require(::getaddrinfo(host.c_str(), port_str.c_str(), &hints, &result) == 0,
            ErrorCode::BridgeClosed, "cannot resolve bridge host '" + host + "'");
    int fd = -1;
    for (addrinfo* ai = result; ai; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(result);
    require(fd >= 0, ErrorCode::BridgeClosed, "cannot connect to bridge at " + host + ":" + port_str);
    return std::make_unique<TcpTransport>(fd);
}

std::unique_ptr<BridgeTransport> open_bridge(const std::string& spec) {
    require(!spec.empty(), ErrorCode::ConfigError, "empty bridge spec");
    if (spec.rfind("spawn:", 0) == 0) return spawn_bridge_process(spec.substr(6));
    // host:port when the tail after the last ':' is a pure port number and
    // the head contains no spaces; otherwise treat as a command line.
    const size_t colon = spec.rfind(':');
    if (colon != std::string::npos && colon > 0 && spec.find(' ') == std::string::npos) {
        const std::string tail = spec.substr(colon + 1);
        if (!tail.empty() && tail.find_first_not_of("0123456789") == std::string::npos)
            return connect_bridge_tcp(spec.substr(0, colon), std::stoi(tail));
    }
    return spawn_bridge_process(spec);
}

template <typename S>
void bridge_send_image(BridgeTransport& transport, const Image<S>& image) {
    transport.write_all("DRBR", 4);
    const uint32_t w = uint32_t(image.width), h = uint32_t(image.height), c = 3;
    transport.write_all(&w, 4);
    transport.write_all(&h, 4);
    transport.write_all(&c, 4);
    std::vector<float> pixels(image.data.size());
    for (size_t i = 0; i < pixels.size(); ++i) pixels[i] = float(image.data[i]);
    transport.write_all(pixels.data(), pixels.size() * 4);
}

BridgeResponse bridge_receive(BridgeTransport& transport, int width, int height) {
    char magic[4];
    transport.read_all(magic, 4);
    require(std::memcmp(magic, "DRBG", 4) == 0, ErrorCode::BridgeProtocolError,
            "bad response magic from bridge scorer");
    BridgeResponse resp;
    transport.read_all(&resp.loss, 8);
    uint8_t stop = 0;
    transport.read_all(&stop, 1);
    resp.stop = stop != 0;
    resp.cotangent.resize(size_t(width) * height * 3);
    transport.read_all(resp.cotangent.data(), resp.cotangent.size() * 4);
    require(std::isfinite(resp.loss), ErrorCode::BridgeProtocolError,
            "bridge scorer returned a non-finite loss");
    return resp;
}

bool bridge_read_request(std::istream& in, BridgeRequest& request) {
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() == 0) return false;  // clean EOF between requests
    require(in.gcount() == 4 && std::memcmp(magic, "DRBR", 4) == 0,
            ErrorCode::BridgeProtocolError, "bad request magic");
    uint32_t w = 0, h = 0, c = 0;
    in.read(reinterpret_cast<char*>(&w), 4);
    in.read(reinterpret_cast<char*>(&h), 4);
    in.read(reinterpret_cast<char*>(&c), 4);
    require(in.good() && c == 3 && w > 0 && h > 0 && w < (1u << 16) && h < (1u << 16),
            ErrorCode::BridgeProtocolError, "bad request header");
    request.width = int(w);
    request.height = int(h);
    request.pixels.resize(size_t(w) * h * 3);
    in.read(reinterpret_cast<char*>(request.pixels.data()),
            std::streamsize(request.pixels.size() * 4));
    require(in.gcount() == std::streamsize(request.pixels.size() * 4),
            ErrorCode::BridgeProtocolError, "truncated request pixels");
    return true;
}

void bridge_write_response(std::ostream& out, double loss, bool stop,
                           const std::vector<float>& cotangent) {
    out.write("DRBG", 4);
    out.write(reinterpret_cast<const char*>(&loss), 8);
    const uint8_t stop_flag = stop ? 1 : 0;
    out.write(reinterpret_cast<const char*>(&stop_flag), 1);
    out.write(reinterpret_cast<const char*>(cotangent.data()),
              std::streamsize(cotangent.size() * 4));
    out.flush();
    require(out.good(), ErrorCode::BridgeClosed, "cannot write bridge response");
}

template void bridge_send_image<float>(BridgeTransport&, const Image<float>&);
template void bridge_send_image<double>(BridgeTransport&, const Image<double>&);

}  // namespace rsplat
