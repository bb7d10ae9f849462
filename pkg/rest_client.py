"""
REST client for a remote scoring service
Posts scoring requests in the JSON wire format and validates the replies
"""

import argparse
import json
import sys
import threading
from typing import Any, Dict, Optional

import requests
from pydantic import ValidationError

from core.errors import LengthMismatch, Malformed, Transport
from core.scoring import ScorerDecision
from core.wire_format import RemoteScoreRequest, RemoteScoreResponse


class ScorerAPIClient:
    """
    Client for POST /score of a scoring service.

    Calls are serialized per client; the underlying session keeps a pooled
    connection to the endpoint.

    Args:
        endpoint: Base URL of the service, e.g. http://localhost:8090
        timeout: Per-request timeout (seconds)
        retries: Extra attempts after a network failure or 5xx reply
        api_key: Optional bearer token
    """

    def __init__(self, endpoint: str, timeout: float = 30.0, retries: int = 2,
                 api_key: Optional[str] = None):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.session = requests.Session()
        self.session.headers.update({"Content-Type": "application/json"})
        if api_key:
            self.session.headers.update({"Authorization": f"Bearer {api_key}"})
        self._lock = threading.Lock()

    def check_connection(self) -> bool:
        """Check if the service answers its health endpoint"""
        try:
            response = self.session.get(f"{self.endpoint}/", timeout=5)
            return response.status_code == 200
        except requests.exceptions.RequestException:
            return False

    def score(self, request: RemoteScoreRequest, params: Optional[Dict[str, str]] = None) -> RemoteScoreResponse:
        """
        Send one scoring request.

        Raises:
            Transport: Network failure or error status after all attempts
            Malformed: Reply is not JSON or lacks a valid `scores` array
            LengthMismatch: Reply scores a different number of options
        """
        payload = request.model_dump(exclude_none=True)
        last_error = "no attempt made"
        for attempt in range(1, self.retries + 2):
            try:
                with self._lock:
                    response = self.session.post(f"{self.endpoint}/score", json=payload,
                                                 params=params, timeout=self.timeout)
            except requests.exceptions.Timeout:
                last_error = f"timeout after {self.timeout}s"
                continue
            except requests.exceptions.RequestException as e:
                last_error = f"connection error: {e}"
                continue

            if response.status_code >= 500:
                last_error = f"HTTP {response.status_code}: {response.text[:200]}"
                continue
            if response.status_code != 200:
                raise Transport(f"HTTP {response.status_code}: {response.text[:200]}")
            return parse_score_response(response, len(request.options))

        raise Transport(f"Scoring service {self.endpoint} failed after {self.retries + 1} attempts ({last_error})")


def parse_score_response(response: requests.Response, option_count: int) -> RemoteScoreResponse:
    try:
        body = response.json()
    except ValueError as e:
        raise Malformed(f"Reply is not JSON: {e}")
    try:
        parsed = RemoteScoreResponse.model_validate(body)
    except ValidationError as e:
        raise Malformed(f"Reply has no valid scores: {e.errors()[0]['msg']}")
    if len(parsed.scores) != option_count:
        raise LengthMismatch(f"{len(parsed.scores)} scores for {option_count} options")
    return parsed


def remote_score(endpoint: str, request: RemoteScoreRequest, timeout: float = 30.0,
                 retries: int = 2) -> ScorerDecision:
    """One-off request; the decision's options are the option numbers of the request"""
    response = ScorerAPIClient(endpoint, timeout, retries).score(request)
    options = tuple(option.number for option in request.options)
    return ScorerDecision(options, tuple(response.scores), response.rationale or "")


def run_probe(client: ScorerAPIClient, args) -> Dict[str, Any]:
    """Capture the exploration images of a scene and ask the service to pick one"""
    from core.wire_format import RemoteOption, encode_image, segmentation_image
    from simworld.camera import scene_image_set
    from simworld.occupancy import build_occupancy_map
    from simworld.robot import exploration_poses
    from simworld.scene import SceneSpec

    scene = SceneSpec.load(args.scene)
    free_map = build_occupancy_map(scene).inflate(0.25)
    frames = scene_image_set(scene, exploration_poses(scene, free_map))
    options = [RemoteOption(index=f.index, image=encode_image(segmentation_image(f))) for f in frames]
    task = args.task or (scene.task.text if scene.task else "find the object")
    request = RemoteScoreRequest(task=task, stage="select_image", options=options)
    params = {"behavior": args.behavior} if args.behavior else None
    response = client.score(request, params=params)
    decision = ScorerDecision(tuple(o.number for o in options), tuple(response.scores), response.rationale or "")
    return decision.to_dict()


def main():
    parser = argparse.ArgumentParser(
        description="""REST client for a scoring service

Checks that a scoring service is up and, given a scene file, sends the
scene's exploration images as a select_image request.
        """,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
USAGE EXAMPLES:
  python rest_client.py                                   # Health check on localhost:8090
  python rest_client.py -p 9000                           # Custom port
  python rest_client.py --scene scene.json                # Probe with a scene's images
  python rest_client.py --scene scene.json --behavior prefer_last

TYPICAL WORKFLOW:
1. Start the stub scorer: python main.py serve -p 8090
2. Probe it: python rest_client.py --scene scene.json
3. Run episodes against it: python main.py run --scene scene.json --scorer remote:http://localhost:8090
        """
    )
    parser.add_argument("-H", "--host", default="localhost", help="Scoring service host (default: localhost)")
    parser.add_argument("-p", "--port", type=int, default=8090, help="Scoring service port (default: 8090)")
    parser.add_argument("--scene", help="Scene JSON whose exploration images are sent")
    parser.add_argument("--task", help="Task text (default: the scene's task)")
    parser.add_argument("--behavior", help="Stub behavior query parameter")
    parser.add_argument("--timeout", type=float, default=30.0, help="Request timeout in seconds")
    args = parser.parse_args()

    client = ScorerAPIClient(f"http://{args.host}:{args.port}", timeout=args.timeout)
    if not client.check_connection():
        print(f"Cannot connect to scoring service at {client.endpoint}")
        print("Make sure the server is running:")
        print("  python main.py serve")
        sys.exit(1)
    print(f"Connected to {client.endpoint}")

    if not args.scene:
        return
    try:
        print(json.dumps(run_probe(client, args), indent=2))
    except (Transport, Malformed, LengthMismatch) as e:
        print(f"{e.code}: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
