"""HTTP clients for the three upstream services.

The consumed contract is deliberately tiny: POST recommend/get with the
full user_profile returns a rec_list; user/get, item/get and item/desc
are plain GETs; user/update is an optional fire-and-forget POST. GETs are
retried once on connection trouble since they are idempotent; POSTs are
not retried.
"""

from __future__ import annotations

import logging

import httpx

from .model import (
    ItemProfile,
    MalformedDocument,
    RecommendationList,
    UserProfile,
    parse_item_profile,
    parse_rec_list,
    parse_user_profile,
    user_profile_to_dict,
)

logger = logging.getLogger(__name__)


class UpstreamError(RuntimeError):
    pass


class UpstreamUnavailable(UpstreamError):
    """Timeout, refused connection, or a 5xx reply."""


class UpstreamMalformed(UpstreamError):
    """The service answered, but the body does not parse."""


class NotFound(UpstreamError):
    """The service answered 404 for the requested id."""


class ServiceClients:
    def __init__(
        self,
        recommender_base_url: str,
        user_service_base_url: str,
        item_service_base_url: str,
        timeout_ms: int = 2000,
    ):
        self.recommender_base = recommender_base_url.rstrip("/")
        self.user_base = user_service_base_url.rstrip("/")
        self.item_base = item_service_base_url.rstrip("/")
        self._http = httpx.Client(timeout=timeout_ms / 1000.0)

    def close(self) -> None:
        self._http.close()

    def _get(self, url: str) -> httpx.Response:
        last_exc = None
        for attempt in (1, 2):  # one retry for idempotent GETs
            try:
                response = self._http.get(url)
            except httpx.HTTPError as exc:
                last_exc = exc
                logger.warning("GET %s failed (attempt %d): %s", url, attempt, exc)
                continue
            if response.status_code == 404:
                raise NotFound(url)
            if response.status_code >= 500:
                last_exc = UpstreamUnavailable(f"{url} answered {response.status_code}")
                continue
            return response
        raise UpstreamUnavailable(f"GET {url}: {last_exc}")

    def _post(self, url: str, payload: dict) -> httpx.Response:
        try:
            response = self._http.post(url, json=payload)
        except httpx.HTTPError as exc:
            raise UpstreamUnavailable(f"POST {url}: {exc}") from exc
        if response.status_code == 404:
            raise NotFound(url)
        if response.status_code >= 500:
            raise UpstreamUnavailable(f"{url} answered {response.status_code}")
        return response

    def fetch_recommendations(self, profile: UserProfile) -> RecommendationList:
        """POST the full profile (opaque extras included) to recommend/get."""
        response = self._post(f"{self.recommender_base}/recommend/get",
                              user_profile_to_dict(profile))
        try:
            return parse_rec_list(response.content)
        except MalformedDocument as exc:
            raise UpstreamMalformed(f"bad rec_list: {exc}") from exc

    def fetch_user(self, user_id: str) -> UserProfile:
        response = self._get(f"{self.user_base}/user/get/{user_id}")
        try:
            return parse_user_profile(response.content)
        except MalformedDocument as exc:
            raise UpstreamMalformed(f"bad user_profile: {exc}") from exc

    def fetch_item(self, item_id: str) -> ItemProfile:
        response = self._get(f"{self.item_base}/item/get/{item_id}")
        try:
            return parse_item_profile(response.content)
        except MalformedDocument as exc:
            raise UpstreamMalformed(f"bad item_profile: {exc}") from exc

    def fetch_item_description(self, item_id: str) -> str:
        response = self._get(f"{self.item_base}/item/desc/{item_id}")
        try:
            doc = response.json()
            description = doc["description"]
        except (ValueError, KeyError, TypeError) as exc:
            raise UpstreamMalformed(f"bad item description: {exc}") from exc
        if not isinstance(description, str):
            raise UpstreamMalformed("item description must be a string")
        return description

    def fetch_all_items(self) -> list[ItemProfile]:
        """Corpus bootstrap endpoint (mock services expose item/all)."""
        response = self._get(f"{self.item_base}/item/all")
        try:
            doc = response.json()
            return [parse_item_profile(item) for item in doc["items"]]
        except (ValueError, KeyError, TypeError, MalformedDocument) as exc:
            raise UpstreamMalformed(f"bad item corpus: {exc}") from exc

    def push_user_update(self, profile: UserProfile) -> bool:
        """Best-effort notification; failures are logged, never surfaced."""
        try:
            self._post(f"{self.user_base}/user/update", user_profile_to_dict(profile))
            return True
        except UpstreamError as exc:
            logger.warning("user/update for %s failed: %s", profile.user_id, exc)
            return False
