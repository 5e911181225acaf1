/** Metadata panel for a provenance node: view, add, and modify tags. */

import type { ApiClient } from "./api.js";
import type { ProvNode, TaggedValue } from "./types.js";
import { nodeKey } from "./types.js";

export class TagPanel {
  attributes: Record<string, TaggedValue> = {};

  constructor(
    private client: ApiClient,
    private node: ProvNode,
  ) {}

  async refresh(): Promise<void> {
    try {
      const record = await this.client.getMeta("fileset", nodeKey(this.node));
      this.attributes = record.attributes;
    } catch {
      this.attributes = {}; // node not yet tagged
    }
  }

  async setTag(key: string, raw: string): Promise<void> {
    const asNumber = Number(raw);
    const value: TaggedValue =
      raw.trim() !== "" && Number.isFinite(asNumber)
        ? { type: "number", value: asNumber }
        : { type: "string", value: raw };
    const record = await this.client.setMeta("fileset", nodeKey(this.node), {
      [key]: value,
    });
    this.attributes = record.attributes;
  }
}
