#include "mocnn/dispatch.hpp"

#include "socket.hpp"

#include <algorithm>

namespace mocnn {

using protocol::Json;
using protocol::TransportError;

TcpWorkerLink::TcpWorkerLink(std::string address) : address_(std::move(address))
{
    net::parseHostPort(address_);
}

Json TcpWorkerLink::call(const Json& request, std::chrono::milliseconds timeout)
{
    const auto deadline = net::Clock::now() + timeout;
    try {
        auto s = net::Socket::connect(net::parseHostPort(address_), deadline, &cancelled_);
        net::writeFrame(s, request, deadline, &cancelled_);
        auto payload = net::readFrame(s, deadline, &cancelled_);
        if (!payload) {
            throw TransportError(address_ + ": connection closed by worker");
        }
        return protocol::decodePayload(*payload);
    } catch (const protocol::MalformedFrame& e) {
        throw TransportError(address_ + ": bad reply: " + e.what());
    }
}

ProbeResult probe(WorkerLink& link, WorkerEndpoint& endpoint, std::chrono::milliseconds timeout)
{
    try {
        if (protocol::typeOf(link.call(protocol::ping(), timeout)) == "PONG") {
            endpoint.consecutiveFailures = 0;
            if (endpoint.state == WorkerState::Dead) {
                endpoint.state = WorkerState::Available;
            }
            return ProbeResult::Available;
        }
    } catch (const std::exception&) {
        // unreachable workers are reported, not raised
    }
    ++endpoint.consecutiveFailures;
    if (endpoint.consecutiveFailures >= kDeadAfterFailures) {
        endpoint.state = WorkerState::Dead;
    }
    return ProbeResult::Unavailable;
}

Dispatcher::Dispatcher(std::vector<std::shared_ptr<WorkerLink>> workers, DispatchOptions options)
    : options_(options)
{
    if (workers.empty()) {
        throw std::invalid_argument("dispatcher needs at least one worker");
    }
    for (auto& link : workers) {
        if (!link) {
            throw std::invalid_argument("null worker link");
        }
        auto w = std::make_unique<Worker>();
        w->endpoint.address = link->address();
        w->link = std::move(link);
        workers_.push_back(std::move(w));
    }
    for (std::size_t i = 0; i < workers_.size(); ++i) {
        workers_[i]->executor = std::thread([this, i] { executorLoop(i); });
    }
    loop_ = std::thread([this] { dispatchLoop(); });
}

Dispatcher::~Dispatcher()
{
    shutdown();
}

BatchHandle Dispatcher::submitBatch(const std::vector<DecodedGenotype>& genotypes, const SearchSpace& space)
{
    std::lock_guard lock(mutex_);
    if (stopping_) {
        throw std::runtime_error("dispatcher is shut down");
    }
    auto batch = std::make_shared<Batch>();
    BatchHandle handle(batch->promise.get_future().share());
    batch->results.resize(genotypes.size());
    batch->filled.assign(genotypes.size(), false);
    batch->remaining = genotypes.size();
    if (genotypes.empty()) {
        batch->settled = true;
        batch->promise.set_value({});
        return handle;
    }
    for (std::size_t i = 0; i < genotypes.size(); ++i) {
        const auto id = nextJobId_++;
        Job job;
        job.id = id;
        job.batch = batch;
        job.slot = i;
        job.request = protocol::evaluateRequest(id, genotypes[i].key(), space);
        jobs_.emplace(id, std::move(job));
        batch->results[i].jobId = id;
        pending_.push_back(id);
    }
    changed_.notify_all();
    return handle;
}

void Dispatcher::shutdown()
{
    {
        std::lock_guard lock(mutex_);
        if (!stopping_) {
            stopping_ = true;
            std::vector<std::shared_ptr<Batch>> open;
            for (auto& [id, job] : jobs_) {
                if (!job.batch->settled) {
                    open.push_back(job.batch);
                }
            }
            for (auto& b : open) {
                failBatch(b, "dispatcher shut down");
            }
            for (auto& w : workers_) {
                w->link->cancel();
                w->wake.notify_all();
            }
            changed_.notify_all();
        }
    }
    if (loop_.joinable()) {
        loop_.join();
    }
    for (auto& w : workers_) {
        if (w->executor.joinable()) {
            w->executor.join();
        }
    }
}

DispatchStats Dispatcher::stats() const
{
    std::lock_guard lock(mutex_);
    return stats_;
}

std::vector<WorkerEndpoint> Dispatcher::endpoints() const
{
    std::lock_guard lock(mutex_);
    std::vector<WorkerEndpoint> out;
    for (const auto& w : workers_) {
        out.push_back(w->endpoint);
    }
    return out;
}

std::size_t Dispatcher::inFlight() const
{
    return static_cast<std::size_t>(std::count_if(workers_.begin(), workers_.end(),
                                                  [](const auto& w) { return w->assigned.has_value(); }));
}

void Dispatcher::dispatchLoop()
{
    std::unique_lock lock(mutex_);
    while (!stopping_) {
        bool assigned = false;
        for (auto& wp : workers_) {
            if (stopping_ || pending_.empty()) {
                break;
            }
            auto& w = *wp;
            if (w.endpoint.state == WorkerState::Busy) {
                continue;
            }
            const auto now = std::chrono::steady_clock::now();
            if (w.endpoint.consecutiveFailures > 0 && now - w.lastProbe < options_.probeInterval) {
                continue;
            }
            w.lastProbe = now;

            auto endpoint = w.endpoint;
            auto link = w.link;
            lock.unlock();
            const auto health = probe(*link, endpoint, options_.probeTimeout);
            lock.lock();
            w.endpoint.consecutiveFailures = endpoint.consecutiveFailures;
            w.endpoint.state = endpoint.state;
            if (health != ProbeResult::Available || stopping_ || pending_.empty()) {
                continue;
            }

            const auto id = pending_.front();
            pending_.pop_front();
            auto& job = jobs_.at(id);
            job.status = JobStatus::InFlight;
            if (++job.dispatches > 1) {
                ++stats_.reassigned;
            }
            ++stats_.dispatched;
            w.assigned = id;
            w.endpoint.state = WorkerState::Busy;
            stats_.maxInFlight = std::max(stats_.maxInFlight, inFlight());
            w.wake.notify_one();
            assigned = true;
        }

        if (!pending_.empty()
            && std::all_of(workers_.begin(), workers_.end(),
                           [](const auto& w) { return w->endpoint.state == WorkerState::Dead; })) {
            std::vector<std::shared_ptr<Batch>> starving;
            for (auto id : pending_) {
                starving.push_back(jobs_.at(id).batch);
            }
            for (auto& b : starving) {
                failBatch(b, "all workers are dead");
            }
            continue;
        }
        if (assigned) {
            continue;
        }

        const bool idleWorker = std::any_of(workers_.begin(), workers_.end(),
                                            [](const auto& w) { return w->endpoint.state != WorkerState::Busy; });
        if (!pending_.empty() && idleWorker) {
            changed_.wait_for(lock, options_.probeInterval);
        } else {
            changed_.wait(lock);
        }
    }
}

void Dispatcher::executorLoop(std::size_t index)
{
    auto& w = *workers_[index];
    std::unique_lock lock(mutex_);
    while (true) {
        w.wake.wait(lock, [&] { return stopping_ || w.assigned.has_value(); });
        if (stopping_) {
            return;
        }
        const auto id = *w.assigned;
        const auto request = jobs_.at(id).request;
        auto link = w.link;
        lock.unlock();
        std::optional<Json> reply;
        std::string failure;
        try {
            reply = link->call(request, options_.resultTimeout);
        } catch (const std::exception& e) {
            failure = e.what();
        }
        lock.lock();
        if (reply) {
            complete(index, id, *reply);
        } else {
            fail(index, id, failure, true);
        }
        changed_.notify_all();
    }
}

void Dispatcher::complete(std::size_t worker, std::uint64_t jobId, const Json& reply)
{
    const auto type = protocol::typeOf(reply);
    if (type == "ERROR") {
        fail(worker, jobId, reply.value("message", std::string("worker error")), false);
        return;
    }
    const bool wellFormed = type == "RESULT" && reply.contains("jobId") && reply["jobId"] == jobId
                            && reply.contains("accuracy") && reply["accuracy"].is_number()
                            && reply.contains("bestEpoch") && reply["bestEpoch"].is_number_integer();
    if (!wellFormed) {
        fail(worker, jobId, "unexpected reply " + reply.dump(), true);
        return;
    }

    auto& w = *workers_[worker];
    w.assigned.reset();
    w.endpoint.state = WorkerState::Available;
    w.endpoint.consecutiveFailures = 0;

    const auto it = jobs_.find(jobId);
    if (it == jobs_.end() || it->second.status != JobStatus::InFlight || it->second.batch->settled) {
        ++stats_.duplicatesDiscarded;
        if (it != jobs_.end() && it->second.batch->settled) {
            jobs_.erase(it);
        }
        return;
    }
    auto& job = it->second;
    auto batch = job.batch;
    job.status = JobStatus::Done;
    if (batch->filled[job.slot]) {
        ++stats_.duplicatesDiscarded;
        return;
    }
    batch->filled[job.slot] = true;
    batch->results[job.slot] = {jobId, reply["accuracy"].get<double>(), reply["bestEpoch"].get<int>()};
    if (--batch->remaining == 0) {
        batch->settled = true;
        batch->promise.set_value(batch->results);
        std::erase_if(jobs_, [&](const auto& entry) { return entry.second.batch == batch; });
    }
}

void Dispatcher::fail(std::size_t worker, std::uint64_t jobId, const std::string& why, bool workerFault)
{
    auto& w = *workers_[worker];
    w.assigned.reset();
    if (workerFault) {
        ++w.endpoint.consecutiveFailures;
        w.endpoint.state = w.endpoint.consecutiveFailures >= kDeadAfterFailures ? WorkerState::Dead
                                                                                  : WorkerState::Available;
    } else {
        w.endpoint.state = WorkerState::Available;
        w.endpoint.consecutiveFailures = 0;
    }

    const auto it = jobs_.find(jobId);
    if (it == jobs_.end()) {
        return;
    }
    auto& job = it->second;
    if (job.batch->settled) {
        jobs_.erase(it);
        return;
    }
    job.lastError = why;
    if (job.dispatches > options_.maxReassignments) {
        failBatch(job.batch, "job " + std::to_string(jobId) + " failed after " + std::to_string(job.dispatches)
                                 + " attempts: " + why);
        return;
    }
    job.status = JobStatus::Pending;
    pending_.push_front(jobId);
}

void Dispatcher::failBatch(const std::shared_ptr<Batch>& batch, const std::string& why)
{
    if (batch->settled) {
        return;
    }
    batch->settled = true;
    batch->promise.set_exception(std::make_exception_ptr(BatchFailed(why)));
    std::erase_if(pending_, [&](std::uint64_t id) { return jobs_.at(id).batch == batch; });
    std::erase_if(jobs_, [&](const auto& entry) {
        return entry.second.batch == batch && entry.second.status != JobStatus::InFlight;
    });
}

std::vector<AccuracyResult> DispatchBackend::evaluateBatch(std::span<const DecodedGenotype> batch,
                                                           const SearchSpace& space)
{
    const auto handle = dispatcher_.submitBatch({batch.begin(), batch.end()}, space);
    const auto& results = handle.get();
    std::vector<AccuracyResult> out;
    out.reserve(results.size());
    for (const auto& r : results) {
        out.push_back({r.accuracy, r.bestEpoch});
    }
    return out;
}

} // namespace mocnn
