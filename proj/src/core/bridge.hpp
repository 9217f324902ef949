#pragma once

#include <memory>
#include <string>
#include <vector>

#include "image.hpp"

namespace rsplat {

// External-objective gradient bridge. One request/response in flight:
//   request  = "DRBR", u32 width, u32 height, u32 channels(=3), f32 pixels
//   response = "DRBG", f64 loss, u8 stop_flag, f32 cotangent (same shape)
// Any deviation raises BridgeProtocolError; a closed stream raises
// BridgeClosed.

class BridgeTransport {
  public:
    virtual ~BridgeTransport() = default;
    virtual void write_all(const void* data, size_t len) = 0;
    virtual void read_all(void* data, size_t len) = 0;  // throws BridgeClosed on EOF
};

// Spawns `command` (split on whitespace) and talks over its stdin/stdout.
std::unique_ptr<BridgeTransport> spawn_bridge_process(const std::string& command);

// Connects to host:port over TCP.
std::unique_ptr<BridgeTransport> connect_bridge_tcp(const std::string& host, int port);

// "spawn:" prefix or a plain command spawns a child process; "host:port"
// connects over TCP.
std::unique_ptr<BridgeTransport> open_bridge(const std::string& spec);

struct BridgeResponse {
    double loss = 0.0;
    bool stop = false;
    std::vector<float> cotangent;  // h*w*3 row-major
};

template <typename S>
void bridge_send_image(BridgeTransport& transport, const Image<S>& image);

BridgeResponse bridge_receive(BridgeTransport& transport, int width, int height);

// Scorer side: reads one request from `in`, returns false on clean EOF.
struct BridgeRequest {
    int width = 0, height = 0;
    std::vector<float> pixels;
};
bool bridge_read_request(std::istream& in, BridgeRequest& request);
void bridge_write_response(std::ostream& out, double loss, bool stop,
                           const std::vector<float>& cotangent);

}  // namespace rsplat
