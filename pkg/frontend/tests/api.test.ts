import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { MockService } from "./mock_service.js";

describe("ApiClient", () => {
  it("posts create-session bodies in the wire shape", async () => {
    const svc = new MockService();
    const api = new ApiClient("http://svc", svc.fetch);
    const resp = await api.createSession("scene", "mask", { x1: 1, y1: 2, x2: 3, y2: 4 }, "hi");
    expect(resp.session_id).toBe("s1");
    expect(svc.calls[0]).toEqual({
      method: "POST",
      path: "http://svc/sessions",
      body: { scene_png: "scene", mask_png: "mask", bbox: [1, 2, 3, 4], text: "hi" },
    });
  });

  it("raises ApiError with the service detail on non-2xx", async () => {
    const svc = new MockService();
    const api = new ApiClient("", svc.fetch);
    await expect(api.getSession("nope")).rejects.toThrowError(ApiError);
    await expect(api.getSession("nope")).rejects.toThrow("no such session");
  });

  it("fetches the attribute catalog", async () => {
    const svc = new MockService();
    const api = new ApiClient("", svc.fetch);
    const got = await api.attributes();
    expect(got.facets.color).toEqual(["blue", "green", "red"]);
  });
});
