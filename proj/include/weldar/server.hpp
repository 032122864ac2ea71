#pragma once

// WebSocket transport for the live protocol: every text frame carries
// exactly one JSON message. One thread per connection; frames of a session
// are processed in arrival order.

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <sys/socket.h>

#include <atomic>
#include <list>
#include <set>
#include <thread>

#include "weldar/protocol.hpp"

namespace weldar {

namespace net {
namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = boost::beast::websocket;
using tcp = boost::asio::ip::tcp;
}  // namespace net

class WebSocketServer {
public:
    /// Port 0 binds an ephemeral port; see port().
    WebSocketServer(ServiceCore& core, unsigned short port, const std::string& address = "127.0.0.1")
        : core_(core), acceptor_(ioc_) {
        const net::tcp::endpoint ep(net::asio::ip::make_address(address), port);
        acceptor_.open(ep.protocol());
        acceptor_.set_option(net::asio::socket_base::reuse_address(true));
        acceptor_.bind(ep);
        acceptor_.listen();
        port_ = acceptor_.local_endpoint().port();
    }

    WebSocketServer(const WebSocketServer&) = delete;
    WebSocketServer& operator=(const WebSocketServer&) = delete;
    ~WebSocketServer() { stop(); }

    unsigned short port() const { return port_; }

    /// Accepts connections on a background thread.
    void start() {
        if (accept_thread_.joinable()) return;
        accept_thread_ = std::thread([this] { run(); });
    }

    /// Blocking accept loop; returns after stop().
    void run() {
        while (!stopping_) {
            net::tcp::socket sock(ioc_);
            boost::system::error_code ec;
            acceptor_.accept(sock, ec);
            if (stopping_) break;
            if (ec) continue;
            std::lock_guard lock(mu_);
            fds_.insert(sock.native_handle());
            workers_.emplace_back([this, s = std::move(sock)]() mutable { serve_connection(std::move(s)); });
        }
    }

    /// Unblocks accept and every connection, then joins all threads. Each
    /// dropped connection checkpoints its session.
    void stop() {
        if (stopping_.exchange(true)) return;
        ::shutdown(acceptor_.native_handle(), SHUT_RDWR);
        {
            std::lock_guard lock(mu_);
            for (int fd : fds_) ::shutdown(fd, SHUT_RDWR);
        }
        if (accept_thread_.joinable()) accept_thread_.join();
        std::list<std::thread> workers;
        {
            std::lock_guard lock(mu_);
            workers.swap(workers_);
        }
        for (auto& t : workers)
            if (t.joinable()) t.join();
        boost::system::error_code ec;
        acceptor_.close(ec);
    }

private:
    void serve_connection(net::tcp::socket sock) {
        const int fd = sock.native_handle();
        auto conn = core_.connect();
        try {
            net::websocket::stream<net::tcp::socket> ws(std::move(sock));
            ws.set_option(net::websocket::stream_base::decorator([](net::websocket::response_type& res) {
                res.set(boost::beast::http::field::server, "weldar");
            }));
            ws.accept();
            net::beast::flat_buffer buf;
            for (;;) {
                ws.read(buf);
                std::vector<std::string> replies;
                if (!ws.got_text()) {
                    replies.push_back(wire::error_message("ProtocolError", "binary frames are not accepted").dump());
                } else {
                    replies = conn->handle_text(net::beast::buffers_to_string(buf.data()));
                }
                buf.consume(buf.size());
                ws.text(true);
                for (const auto& r : replies) ws.write(net::asio::buffer(r));
            }
        } catch (const std::exception&) {
            // Closed by the peer or by stop().
        }
        conn->disconnect();
        std::lock_guard lock(mu_);
        fds_.erase(fd);
    }

    ServiceCore& core_;
    net::asio::io_context ioc_;
    net::tcp::acceptor acceptor_;
    unsigned short port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_;
    std::mutex mu_;
    std::set<int> fds_;
    std::list<std::thread> workers_;
};

/// Minimal blocking client, used by tests and scripted sessions.
class WebSocketClient {
public:
    WebSocketClient(const std::string& host, unsigned short port) : ws_(ioc_) {
        net::tcp::resolver resolver(ioc_);
        const auto results = resolver.resolve(host, std::to_string(port));
        net::asio::connect(ws_.next_layer(), results.begin(), results.end());
        ws_.handshake(host + ":" + std::to_string(port), "/");
        ws_.text(true);
    }

    ~WebSocketClient() { close(); }

    void send(const json& msg) {
        const std::string s = msg.dump();
        ws_.write(net::asio::buffer(s));
    }

    json receive() {
        net::beast::flat_buffer buf;
        ws_.read(buf);
        return json::parse(net::beast::buffers_to_string(buf.data()));
    }

    /// Sends one message and reads `replies` messages back.
    std::vector<json> request(const json& msg, std::size_t replies) {
        send(msg);
        std::vector<json> out;
        for (std::size_t i = 0; i < replies; ++i) out.push_back(receive());
        return out;
    }

    void close() {
        if (closed_) return;
        closed_ = true;
        boost::system::error_code ec;
        ws_.close(net::websocket::close_code::normal, ec);
    }

private:
    net::asio::io_context ioc_;
    net::websocket::stream<net::tcp::socket> ws_;
    bool closed_ = false;
};

}  // namespace weldar
